#![allow(dead_code)]

use collision_reflex::reflex::{CollisionParams1D, SensingMode};
use rand::Rng;

/// Random valid 1D parameter set in the documented oracle ranges.
pub fn random_params(rng: &mut impl Rng) -> CollisionParams1D {
    CollisionParams1D {
        m_f: rng.random_range(0.05..0.5),
        m_r: rng.random_range(0.2..5.0),
        k_m: rng.random_range(500.0..2e4),
        k_s: rng.random_range(50.0..2000.0),
        sensing: SensingMode::ForceThreshold {
            f_s: rng.random_range(0.5..5.0),
        },
        v_0: rng.random_range(0.1..2.0),
        f_a: rng.random_range(2.0..50.0),
        ..Default::default()
    }
}

/// Parameters for fit round trips: contact stiffness equal to the 2e7 N/m
/// spike stiffness so the fitted model is exact.
pub fn random_fit_params(rng: &mut impl Rng) -> CollisionParams1D {
    let m_r = rng.random_range(0.2..2.0);
    CollisionParams1D {
        m_f: rng.random_range(0.05..0.3),
        m_r,
        k_m: 2e7,
        k_s: rng.random_range(200.0..1000.0),
        sensing: SensingMode::ForceThreshold {
            f_s: rng.random_range(1.5..5.0),
        },
        v_0: rng.random_range(0.05..0.3),
        f_a: m_r * rng.random_range(0.5..5.0),
        ..Default::default()
    }
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > tol * (a.abs() + b.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
