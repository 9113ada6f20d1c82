//! One-shot least-squares fit of the piecewise collision model to a trace.
//!
//! Model: half-sine spike of duration `π·sqrt(m_f/k_m)` carrying `m_f·v_0`,
//! linear ramp `k·v_0·τ` up to `F_s` with `k = k_m k_s / (k_m + k_s)`, then
//! `F_s − k_m·a·(τ − t1)²/2` down to zero; `τ = t − t0`.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use super::quadrature::trapezoid_between;
use super::segment::segment_trace;
use super::ForceTrace;
use crate::error::{positive, Result};

const NP: usize = 5;
type Mat = SMatrix<f64, NP, NP>;
type Vec5 = SVector<f64, NP>;

pub const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSigma {
    pub m_f: f64,
    pub k_s: f64,
    pub f_s: f64,
    pub a: f64,
    pub t0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// kg
    pub m_f: f64,
    /// N/m
    pub k_s: f64,
    /// N
    pub f_s: f64,
    /// m/s²
    pub a: f64,
    /// Fixed mechanical stiffness, N/m.
    pub k_m: f64,
    /// Known pre-impact velocity, m/s.
    pub v_0: f64,
    /// Fitted contact time, s.
    pub t0: f64,
    pub sigma: FitSigma,
    /// N
    pub residual_rms: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Model {
    m_f: f64,
    k_s: f64,
    f_s: f64,
    a: f64,
    t0: f64,
    k_m: f64,
    v_0: f64,
}

impl Model {
    fn force(&self, t: f64) -> f64 {
        let tau = t - self.t0;
        if tau <= 0.0 {
            return 0.0;
        }
        let duration = std::f64::consts::PI * (self.m_f / self.k_m).sqrt();
        let spike = if tau < duration {
            std::f64::consts::PI * self.m_f * self.v_0 / (2.0 * duration)
                * (std::f64::consts::PI * tau / duration).sin()
        } else {
            0.0
        };
        let k = self.k_m * self.k_s / (self.k_m + self.k_s);
        let t1 = self.f_s / (k * self.v_0);
        let spring = if tau <= t1 {
            k * self.v_0 * tau
        } else {
            let r = tau - t1;
            (self.f_s - 0.5 * self.k_m * self.a * r * r).max(0.0)
        };
        spike + spring
    }
}

impl FitResult {
    /// Force predicted by the fitted model at time `t`.
    pub fn predict(&self, t: f64) -> f64 {
        self.model().force(t)
    }

    fn model(&self) -> Model {
        Model {
            m_f: self.m_f,
            k_s: self.k_s,
            f_s: self.f_s,
            a: self.a,
            t0: self.t0,
            k_m: self.k_m,
            v_0: self.v_0,
        }
    }
}

// Search coordinates: logs of the positive parameters, and t0 in sample units.
struct Problem<'a> {
    t: &'a [f64],
    f: &'a [f64],
    k_m: f64,
    v_0: f64,
    dt: f64,
}

impl Problem<'_> {
    fn model(&self, x: &Vec5) -> Model {
        Model {
            m_f: x[0].exp(),
            k_s: x[1].exp(),
            f_s: x[2].exp(),
            a: x[3].exp(),
            t0: x[4] * self.dt,
            k_m: self.k_m,
            v_0: self.v_0,
        }
    }

    fn residuals(&self, x: &Vec5, out: &mut [f64]) {
        let m = self.model(x);
        for ((r, &t), &f) in out.iter_mut().zip(self.t).zip(self.f) {
            *r = m.force(t) - f;
        }
    }

    fn cost(&self, x: &Vec5, scratch: &mut [f64]) -> f64 {
        self.residuals(x, scratch);
        scratch.iter().map(|r| r * r).sum::<f64>()
    }

    /// Normal matrix `JᵀJ` and gradient `Jᵀr` with a central-difference Jacobian.
    fn normal_equations(&self, x: &Vec5, r: &[f64], plus: &mut [f64], minus: &mut [f64]) -> (Mat, Vec5) {
        let n = r.len();
        let mut columns = vec![[0.0; NP]; n];
        for j in 0..NP {
            let h = if j == 4 { 1e-3 } else { 1e-6 };
            let mut xp = *x;
            let mut xm = *x;
            xp[j] += h;
            xm[j] -= h;
            self.residuals(&xp, plus);
            self.residuals(&xm, minus);
            for i in 0..n {
                columns[i][j] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
        let mut jtj = Mat::zeros();
        let mut jtr = Vec5::zeros();
        for (row, &ri) in columns.iter().zip(r) {
            let v = Vec5::from(*row);
            jtj += v * v.transpose();
            jtr += v * ri;
        }
        (jtj, jtr)
    }
}

/// Fits `(m_f, k_s, F_s, a)` plus the contact time, with `k_m` fixed and
/// `v_0` known. Initial values come from [`segment_trace`]; a failed
/// optimization returns them with `converged = false`.
pub fn fit_trace(trace: &ForceTrace, k_m: f64, v_0: f64) -> Result<FitResult> {
    positive("k_m", k_m)?;
    positive("v_0", v_0)?;
    let seg = segment_trace(trace)?;
    let (t, f) = (trace.times(), trace.forces());
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    let mu = seg.noise_mean;

    // initialization
    let k_init = (seg.ramp_slope / v_0).min(0.5 * k_m).max(1e-9);
    let k_s_init = k_init * k_m / (k_m - k_init);
    let f_s_init = (seg.peak - mu).max(1e-9);
    let a_init = (2.0 * seg.decay_curvature / k_m).max(1e-12);
    let (t0_init, m_f_init) = match seg.spike_end {
        Some(end) => {
            let t0 = seg.t_contact - 0.5 * dt;
            let centred: Vec<f64> = f.iter().map(|v| v - mu).collect();
            let total = trapezoid_between(t, &centred, t0 - dt, end);
            let ramp = 0.5 * k_init * v_0 * (end - t0).powi(2);
            (t0, ((total - ramp) / v_0).max(1e-6))
        }
        None => (seg.t_contact, 1e-6),
    };
    let x0 = Vec5::new(
        m_f_init.ln(),
        k_s_init.ln(),
        f_s_init.ln(),
        a_init.ln(),
        t0_init / dt,
    );

    let problem = Problem { t, f, k_m, v_0, dt };
    let n = t.len();
    let mut r = vec![0.0; n];
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];

    let mut x = x0;
    let mut cost = problem.cost(&x, &mut r);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let mut last_jtj = Mat::identity();
    'outer: while iterations < MAX_ITERATIONS {
        iterations += 1;
        problem.residuals(&x, &mut r);
        let (jtj, jtr) = problem.normal_equations(&x, &r, &mut plus, &mut minus);
        last_jtj = jtj;
        let scale = jtj.diagonal().max().max(f64::MIN_POSITIVE);
        loop {
            let mut damped = jtj;
            for i in 0..NP {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12 * scale);
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 4.0;
                if lambda > 1e12 {
                    converged = true;
                    break 'outer;
                }
                continue;
            };
            let step = -chol.solve(&jtr);
            let trial = x + step;
            let trial_cost = problem.cost(&trial, &mut plus);
            if trial_cost.is_finite() && trial_cost < cost {
                let gain = (cost - trial_cost) / cost.max(f64::MIN_POSITIVE);
                x = trial;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-12);
                if gain < 1e-12 || step.amax() < 1e-10 || cost < 1e-28 * n as f64 {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            lambda *= 4.0;
            if lambda > 1e12 {
                // no descent direction left: at a minimum to working precision
                converged = true;
                break 'outer;
            }
        }
    }

    let dof = (n as f64 - NP as f64).max(1.0);
    let variance = cost / dof;
    let cov = last_jtj.try_inverse().unwrap_or_else(|| Mat::from_element(f64::NAN)) * variance;
    let sd = |i: usize| cov[(i, i)].max(0.0).sqrt();

    let x_out = if converged { x } else { x0 };
    let model = problem.model(&x_out);
    let residual_rms = (problem.cost(&x_out, &mut r) / n as f64).sqrt();
    Ok(FitResult {
        m_f: model.m_f,
        k_s: model.k_s,
        f_s: model.f_s,
        a: model.a,
        k_m,
        v_0,
        t0: model.t0,
        sigma: FitSigma {
            m_f: model.m_f * sd(0),
            k_s: model.k_s * sd(1),
            f_s: model.f_s * sd(2),
            a: model.a * sd(3),
            t0: dt * sd(4),
        },
        residual_rms,
        converged,
        iterations,
    })
}
