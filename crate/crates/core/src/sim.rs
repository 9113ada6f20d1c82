//! Fixed-step simulator of the 1D collision timeline: contact and plastic
//! spike, velocity-controlled ramp until the threshold trips, then a constant
//! reaction force on the robot mass until the contact releases.
//!
//! Integration is classical RK4 on the sample grid `t_j = j·dt`. Steps are
//! split at events; state events (detection, release) are located by
//! bisection on the step length.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Error, Result};
use crate::reflex::{CollisionParams1D, PhaseBreakdown};
use crate::trace::{quadrature::trapezoid_between, ForceTrace};

/// Hard cap on `t_max / dt`.
pub const MAX_STEPS: f64 = 2e7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpikeModel {
    /// Momentum `m_f·v_0` deposited at contact. The trace carries it as a
    /// single sample of height `m_f·v_0/dt` at `t = 0`.
    Instantaneous,
    /// Half-sine pulse of duration `π·sqrt(m_f/k_c)` with integral `m_f·v_0`.
    HalfSine { contact_stiffness: f64 },
}

impl Default for SpikeModel {
    fn default() -> Self {
        SpikeModel::HalfSine {
            contact_stiffness: 2e7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimOptions {
    /// Step and sample interval, s.
    pub dt: f64,
    /// Simulation horizon, s.
    pub t_max: f64,
    pub spike: SpikeModel,
    /// Standard deviation of additive Gaussian force noise, N.
    pub noise_sigma: f64,
    pub seed: u64,
    /// Delay between detection and the start of the reaction, s.
    pub reaction_latency: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            dt: 1e-5,
            t_max: 10.0,
            spike: SpikeModel::default(),
            noise_sigma: 0.0,
            seed: 0,
            reaction_latency: 0.0,
        }
    }
}

impl SimOptions {
    pub fn validate(&self) -> Result<()> {
        positive("dt", self.dt)?;
        positive("t_max", self.t_max)?;
        if self.t_max / self.dt > MAX_STEPS {
            return Err(Error::domain("t_max/dt", self.t_max / self.dt, "at most 2e7 steps"));
        }
        if let SpikeModel::HalfSine { contact_stiffness } = self.spike {
            positive("k_c", contact_stiffness)?;
        }
        non_negative("noise_sigma", self.noise_sigma)?;
        non_negative("reaction_latency", self.reaction_latency)?;
        Ok(())
    }
}

/// Event times, s. Contact is at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimEvents {
    pub contact: f64,
    /// End of the plastic spike (equals `contact` for an instantaneous spike).
    pub spike_end: f64,
    /// Contact force reaches `F_s`.
    pub detection: f64,
    pub reaction_start: f64,
    /// Contact force returns to zero.
    pub release: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub trace: ForceTrace,
    pub events: SimEvents,
    /// Phase impulses accumulated by the integrator (not from the samples).
    pub integrated: PhaseBreakdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Sensing,
    Reaction,
    Released,
}

// State: [compression, robot speed away from contact, ramp impulse, reaction impulse, spike impulse].
// In sensing mode the compression is that of the lumped spring k; in reaction
// mode it is the mechanical compression under k_m.
type State = [f64; 5];

struct Plant {
    k: f64,
    k_m: f64,
    v_0: f64,
    a: f64,
    f_s: f64,
    spike_duration: f64,
    spike_amplitude: f64,
}

impl Plant {
    fn spike(&self, t: f64) -> f64 {
        if t > 0.0 && t < self.spike_duration {
            self.spike_amplitude * (std::f64::consts::PI * t / self.spike_duration).sin()
        } else {
            0.0
        }
    }

    fn derivative(&self, mode: Mode, t: f64, y: &State) -> State {
        let s = self.spike(t);
        match mode {
            Mode::Sensing => [self.v_0, 0.0, self.k * y[0], 0.0, s],
            Mode::Reaction => [-y[1], self.a, 0.0, self.k_m * y[0], s],
            Mode::Released => [0.0, 0.0, 0.0, 0.0, s],
        }
    }

    fn force(&self, mode: Mode, t: f64, y: &State) -> f64 {
        let spring = match mode {
            Mode::Sensing => self.k * y[0],
            Mode::Reaction => self.k_m * y[0].max(0.0),
            Mode::Released => 0.0,
        };
        spring + self.spike(t)
    }

    fn rk4(&self, mode: Mode, t: f64, y: &State, h: f64) -> State {
        let shift = |y: &State, d: &State, s: f64| -> State { std::array::from_fn(|i| y[i] + s * d[i]) };
        let k1 = self.derivative(mode, t, y);
        let k2 = self.derivative(mode, t + 0.5 * h, &shift(y, &k1, 0.5 * h));
        let k3 = self.derivative(mode, t + 0.5 * h, &shift(y, &k2, 0.5 * h));
        let k4 = self.derivative(mode, t + h, &shift(y, &k3, h));
        std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
    }

    /// Sign-change function of the pending state event; crosses to >= 0 at the event.
    fn event_function(&self, mode: Mode, detected: bool, y: &State) -> Option<f64> {
        match mode {
            Mode::Sensing if !detected => Some(self.k * y[0] - self.f_s),
            Mode::Reaction => Some(-y[0]),
            _ => None,
        }
    }
}

struct Stepper<'a> {
    plant: &'a Plant,
    latency: f64,
    t: f64,
    y: State,
    mode: Mode,
    events: SimEvents,
}

impl Stepper<'_> {
    fn detected(&self) -> bool {
        !self.events.detection.is_nan()
    }

    fn start_reaction(&mut self) {
        let force = self.plant.k * self.y[0];
        self.y[0] = force / self.plant.k_m;
        self.y[1] = 0.0;
        self.mode = Mode::Reaction;
        self.events.reaction_start = self.t;
    }

    fn on_state_event(&mut self) {
        match self.mode {
            Mode::Sensing => {
                self.events.detection = self.t;
                if self.latency == 0.0 {
                    self.start_reaction();
                }
            }
            Mode::Reaction => {
                self.events.release = self.t;
                self.y[0] = 0.0;
                self.y[1] = 0.0;
                self.mode = Mode::Released;
            }
            Mode::Released => {}
        }
    }

    /// Advances to the grid time `t_end`, handling every event inside the step.
    fn advance(&mut self, t_end: f64) {
        while self.t < t_end {
            let mut t_stop = t_end;
            let mut timed_reaction = false;
            let spike_end = self.plant.spike_duration;
            if spike_end > self.t && spike_end < t_stop {
                t_stop = spike_end;
            }
            if self.mode == Mode::Sensing && self.detected() {
                let t_r = self.events.detection + self.latency;
                if t_r <= t_stop {
                    t_stop = t_r.max(self.t);
                    timed_reaction = true;
                }
            }

            let h = t_stop - self.t;
            let next = self.plant.rk4(self.mode, self.t, &self.y, h);
            let detected = self.detected();
            if let (Some(g0), Some(g1)) = (
                self.plant.event_function(self.mode, detected, &self.y),
                self.plant.event_function(self.mode, detected, &next),
            ) {
                if g0 < 0.0 && g1 >= 0.0 {
                    let (mut lo, mut hi) = (0.0, h);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if mid <= lo || mid >= hi {
                            break;
                        }
                        let y_mid = self.plant.rk4(self.mode, self.t, &self.y, mid);
                        match self.plant.event_function(self.mode, detected, &y_mid) {
                            Some(g) if g >= 0.0 => hi = mid,
                            _ => lo = mid,
                        }
                    }
                    self.y = self.plant.rk4(self.mode, self.t, &self.y, hi);
                    self.t = if hi == h { t_stop } else { (self.t + hi).min(t_stop) };
                    self.on_state_event();
                    continue;
                }
            }
            self.y = next;
            self.t = t_stop;
            if timed_reaction {
                self.start_reaction();
            }
        }
    }
}

fn build_trace(forces: Vec<f64>, dt: f64) -> Result<ForceTrace> {
    let active = forces.len();
    let n_pre = active.div_ceil(9).max(8);
    let t: Vec<f64> = (-(n_pre as i64)..active as i64).map(|j| j as f64 * dt).collect();
    let mut f = vec![0.0; n_pre];
    f.extend(forces);
    ForceTrace::new("simulated", t, f)
}

/// Adds seeded zero-mean Gaussian noise to every sample.
pub fn add_noise(trace: &mut ForceTrace, sigma: f64, seed: u64) -> Result<()> {
    non_negative("noise_sigma", sigma)?;
    if sigma == 0.0 {
        return Ok(());
    }
    let normal = Normal::new(0.0, sigma).map_err(|_| Error::domain("noise_sigma", sigma, "must be finite"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for f in trace.forces_mut() {
        *f += normal.sample(&mut rng);
    }
    Ok(())
}

/// Simulates one collision from contact to release.
pub fn simulate(p: &CollisionParams1D, opt: &SimOptions) -> Result<SimResult> {
    p.validate()?;
    opt.validate()?;
    let (spike_duration, spike_amplitude) = match opt.spike {
        SpikeModel::Instantaneous => (0.0, 0.0),
        SpikeModel::HalfSine { contact_stiffness } => {
            let duration = std::f64::consts::PI * (p.m_f / contact_stiffness).sqrt();
            (duration, std::f64::consts::PI * p.m_f * p.v_0 / (2.0 * duration))
        }
    };
    let plant = Plant {
        k: p.sensing_stiffness()?,
        k_m: p.k_m,
        v_0: p.v_0,
        a: p.acceleration(),
        f_s: p.threshold()?,
        spike_duration,
        spike_amplitude,
    };
    let dt = opt.dt;
    let mut stepper = Stepper {
        plant: &plant,
        latency: opt.reaction_latency,
        t: 0.0,
        y: [0.0; 5],
        mode: Mode::Sensing,
        events: SimEvents {
            contact: 0.0,
            spike_end: spike_duration,
            detection: f64::NAN,
            reaction_start: f64::NAN,
            release: f64::NAN,
        },
    };

    let mut forces = vec![plant.force(Mode::Sensing, 0.0, &stepper.y)];
    if opt.spike == SpikeModel::Instantaneous {
        stepper.y[4] = p.m_f * p.v_0;
        forces[0] += p.m_f * p.v_0 / dt;
    }

    let max_steps = (opt.t_max / dt).ceil() as usize;
    let mut j = 0usize;
    while stepper.mode != Mode::Released {
        if j >= max_steps {
            let stage = if stepper.detected() { "release" } else { "detection" };
            let mut partial = build_trace(forces, dt)?;
            add_noise(&mut partial, opt.noise_sigma, opt.seed)?;
            return Err(Error::HorizonExceeded {
                t_max: opt.t_max,
                stage,
                partial: Box::new(partial),
            });
        }
        j += 1;
        let t_end = j as f64 * dt;
        stepper.advance(t_end);
        forces.push(plant.force(stepper.mode, t_end, &stepper.y));
    }

    let events = stepper.events;
    let n_tail = ((0.1 * events.release / dt).ceil() as usize).max(8);
    for _ in 0..n_tail {
        j += 1;
        forces.push(plant.force(Mode::Released, j as f64 * dt, &stepper.y));
    }

    let mut trace = build_trace(forces, dt)?;
    add_noise(&mut trace, opt.noise_sigma, opt.seed)?;
    let y = stepper.y;
    Ok(SimResult {
        trace,
        events,
        integrated: PhaseBreakdown::from_phases(y[4], y[2], y[3], events.detection, events.release),
    })
}

/// Simulates, then integrates the sampled trace phase by phase (trapezoid,
/// linear interpolation at the event times).
pub fn simulated_impulse(p: &CollisionParams1D, opt: &SimOptions) -> Result<PhaseBreakdown> {
    let r = simulate(p, opt)?;
    let (t, f) = (r.trace.times(), r.trace.forces());
    let start = t[0];
    let end = t[t.len() - 1];
    let e = r.events;
    let (i_plastic, i_sensing) = match opt.spike {
        SpikeModel::Instantaneous => {
            let deposit = p.m_f * p.v_0;
            (deposit, trapezoid_between(t, f, start, e.reaction_start) - deposit)
        }
        SpikeModel::HalfSine { .. } => {
            let split = e.spike_end.min(e.reaction_start);
            (
                trapezoid_between(t, f, start, split),
                trapezoid_between(t, f, split, e.reaction_start),
            )
        }
    };
    let i_reaction = trapezoid_between(t, f, e.reaction_start, end);
    Ok(PhaseBreakdown::from_phases(
        i_plastic,
        i_sensing,
        i_reaction,
        e.detection,
        e.release,
    ))
}
