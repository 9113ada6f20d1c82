//! Closed-form collision reflex metric for the 1D finger–spring–robot model.
//!
//! A finger mass `m_f` hits a rigid constraint at `v_0` and stops in a plastic
//! impact. The robot mass `m_r` keeps its commanded velocity and compresses the
//! lumped spring until the force reaches the sensing threshold `F_s` (time
//! `t1`). The software spring is then dropped and the robot accelerates away at
//! `a = F_a / m_r` against the mechanical stiffness `k_m` alone, until the
//! contact force is zero (time `t2`). The metric is the total impulse over the
//! three phases.

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Error, Result};

/// How contact is detected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SensingMode {
    /// Trip when the spring force reaches `f_s` newtons.
    ForceThreshold { f_s: f64 },
    /// Trip when the position-controller error reaches `e_s` metres; the
    /// equivalent force threshold is `k_s * e_s`.
    PositionErrorThreshold { e_s: f64 },
}

impl SensingMode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SensingMode::ForceThreshold { f_s } => positive("F_s", f_s).map(drop),
            SensingMode::PositionErrorThreshold { e_s } => positive("e_s", e_s).map(drop),
        }
    }
}

/// Rule for lumping mechanical and software stiffness into the sensing-phase spring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StiffnessLumping {
    /// `k = k_m k_s / (k_m + k_s)`, or `k_m` when there is no software spring.
    #[default]
    Series,
    /// `k = k_s`. Used when `k_s` already is the full projected stiffness.
    SoftwareOnly,
}

/// Full parameter set of a 1D collision (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollisionParams1D {
    /// Sprung (finger) mass, kg.
    pub m_f: f64,
    /// Unsprung (robot / reflected) mass, kg.
    pub m_r: f64,
    /// Mechanical stiffness, N/m.
    pub k_m: f64,
    /// Software (controller) stiffness, N/m.
    pub k_s: f64,
    pub sensing: SensingMode,
    /// Pre-impact velocity, m/s.
    pub v_0: f64,
    /// Reaction force capability, N.
    pub f_a: f64,
    #[serde(default)]
    pub lumping: StiffnessLumping,
}

impl Default for CollisionParams1D {
    /// 1 kN/m mechanical, 100 N/m software stiffness and a 3 N threshold, with
    /// a 0.1 kg finger, 1 kg robot mass, 10 N reaction force at 0.5 m/s.
    fn default() -> Self {
        Self {
            m_f: 0.1,
            m_r: 1.0,
            k_m: 1000.0,
            k_s: 100.0,
            sensing: SensingMode::ForceThreshold { f_s: 3.0 },
            v_0: 0.5,
            f_a: 10.0,
            lumping: StiffnessLumping::Series,
        }
    }
}

impl CollisionParams1D {
    pub fn validate(&self) -> Result<()> {
        positive("m_f", self.m_f)?;
        positive("m_r", self.m_r)?;
        positive("k_m", self.k_m)?;
        non_negative("k_s", self.k_s)?;
        positive("v_0", self.v_0)?;
        positive("F_a", self.f_a)?;
        self.sensing.validate()?;
        let k = self.sensing_stiffness()?;
        if k > self.k_m * (1.0 + 1e-12) && self.lumping == StiffnessLumping::Series {
            return Err(Error::domain("k", k, "sensing stiffness must not exceed k_m"));
        }
        Ok(())
    }

    /// Robot acceleration during the reaction phase, `F_a / m_r`.
    pub fn acceleration(&self) -> f64 {
        self.f_a / self.m_r
    }

    /// Spring stiffness acting during the sensing phase.
    pub fn sensing_stiffness(&self) -> Result<f64> {
        match self.lumping {
            StiffnessLumping::Series => combined_stiffness(self.k_m, self.k_s),
            StiffnessLumping::SoftwareOnly => positive("k_s", self.k_s),
        }
    }

    /// Force threshold `F_s` after resolving the sensing mode.
    pub fn threshold(&self) -> Result<f64> {
        effective_threshold(self.sensing, self.k_s)
    }

    pub fn with_velocity(mut self, v_0: f64) -> Self {
        self.v_0 = v_0;
        self
    }
}

/// Per-phase impulses (N·s) and event times (s) of one collision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseBreakdown {
    pub i_plastic: f64,
    pub i_sensing: f64,
    pub i_reaction: f64,
    pub total: f64,
    pub t1: f64,
    pub t2: f64,
}

impl PhaseBreakdown {
    pub fn from_phases(i_plastic: f64, i_sensing: f64, i_reaction: f64, t1: f64, t2: f64) -> Self {
        Self {
            i_plastic,
            i_sensing,
            i_reaction,
            total: i_plastic + i_sensing + i_reaction,
            t1,
            t2,
        }
    }
}

/// Lumped sensing-phase stiffness of the mechanical and software springs in series.
pub fn combined_stiffness(k_m: f64, k_s: f64) -> Result<f64> {
    positive("k_m", k_m)?;
    non_negative("k_s", k_s)?;
    if k_s == 0.0 {
        return Ok(k_m);
    }
    Ok(k_m * k_s / (k_m + k_s))
}

pub fn effective_threshold(mode: SensingMode, k_s: f64) -> Result<f64> {
    mode.validate()?;
    match mode {
        SensingMode::ForceThreshold { f_s } => Ok(f_s),
        SensingMode::PositionErrorThreshold { e_s } => {
            if k_s.is_finite() && k_s > 0.0 {
                Ok(k_s * e_s)
            } else {
                Err(Error::domain(
                    "k_s",
                    k_s,
                    "position-error sensing needs k_s > 0 to produce a force",
                ))
            }
        }
    }
}

/// Momentum lost by the finger in the plastic impact.
pub fn plastic_impulse(m_f: f64, v_0: f64) -> Result<f64> {
    Ok(non_negative("m_f", m_f)? * non_negative("v_0", v_0)?)
}

/// Time for the velocity-controlled ramp `k v_0 t` to reach `f_s`.
pub fn sensing_time(f_s: f64, k: f64, v_0: f64) -> Result<f64> {
    non_negative("F_s", f_s)?;
    Ok(f_s / (positive("k", k)? * positive("v_0", v_0)?))
}

/// Triangle area under the sensing ramp.
pub fn sensing_impulse(f_s: f64, k: f64, v_0: f64) -> Result<f64> {
    Ok(0.5 * f_s * sensing_time(f_s, k, v_0)?)
}

/// Time from detection until the mechanical spring is unloaded, `t2 - t1`.
pub fn reaction_duration(f_s: f64, k_m: f64, a: f64) -> Result<f64> {
    non_negative("F_s", f_s)?;
    Ok((2.0 * f_s / (positive("a", a)? * positive("k_m", k_m)?)).sqrt())
}

/// Impulse while the robot accelerates away: integral of `F_s - k_m a t^2 / 2`.
pub fn reaction_impulse(f_s: f64, k_m: f64, a: f64) -> Result<f64> {
    non_negative("F_s", f_s)?;
    positive("a", a)?;
    positive("k_m", k_m)?;
    Ok((8.0 * f_s.powi(3) / (9.0 * a * k_m)).sqrt())
}

/// Collision reflex metric with its phase decomposition.
pub fn total_impulse(p: &CollisionParams1D) -> Result<PhaseBreakdown> {
    p.validate()?;
    let k = p.sensing_stiffness()?;
    let f_s = p.threshold()?;
    let a = p.acceleration();

    let i_plastic = plastic_impulse(p.m_f, p.v_0)?;
    let t1 = sensing_time(f_s, k, p.v_0)?;
    let i_sensing = sensing_impulse(f_s, k, p.v_0)?;
    let i_reaction = reaction_impulse(f_s, p.k_m, a)?;
    let t2 = t1 + reaction_duration(f_s, p.k_m, a)?;
    Ok(PhaseBreakdown::from_phases(
        i_plastic, i_sensing, i_reaction, t1, t2,
    ))
}

/// Pre-impact velocity at which plastic and sensing impulses balance.
pub fn optimal_velocity(f_s: f64, k: f64, m_f: f64) -> Result<f64> {
    positive("F_s", f_s)?;
    positive("k", k)?;
    positive("m_f", m_f)?;
    Ok(f_s / (2.0 * k * m_f).sqrt())
}

/// `v*` for a parameter set (ignores `p.v_0`).
pub fn optimal_velocity_for(p: &CollisionParams1D) -> Result<f64> {
    p.validate()?;
    optimal_velocity(p.threshold()?, p.sensing_stiffness()?, p.m_f)
}

/// Total impulse at `v_0 = v*`, by substitution.
pub fn minimum_impulse(p: &CollisionParams1D) -> Result<f64> {
    let v_star = optimal_velocity_for(p)?;
    Ok(total_impulse(&p.with_velocity(v_star))?.total)
}

/// The same minimum written with the open-loop bandwidths
/// `omega_s = sqrt(k / m_f)` and `omega_a = sqrt(k_m / m_r)`.
pub fn minimum_impulse_bandwidth_form(p: &CollisionParams1D) -> Result<f64> {
    p.validate()?;
    let f_s = p.threshold()?;
    let omega_s = (p.sensing_stiffness()? / p.m_f).sqrt();
    let omega_a = (p.k_m / p.m_r).sqrt();
    Ok(f_s * 2f64.sqrt() / omega_s + f_s / omega_a * (8.0 * f_s / (9.0 * p.f_a)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Static deflection of two springs in a chain under a test load.
    fn chain_stiffness(k_m: f64, k_s: f64) -> f64 {
        let load = 7.0;
        load / (load / k_m + load / k_s)
    }

    // Fixed-step ramp crossing.
    fn ramp_crossing(f_s: f64, k: f64, v_0: f64, dt: f64) -> f64 {
        let mut t = 0.0;
        while k * v_0 * t < f_s {
            t += dt;
        }
        t
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn combined_stiffness_matches_chain() {
        let k = combined_stiffness(1000.0, 100.0).unwrap();
        assert_relative_eq!(k, 1000.0 / 11.0, max_relative = 1e-12);
        assert_relative_eq!(k, chain_stiffness(1000.0, 100.0), max_relative = 1e-12);
        assert_eq!(combined_stiffness(1000.0, 0.0).unwrap(), 1000.0);
        assert_relative_eq!(combined_stiffness(250.0, 250.0).unwrap(), 125.0);
        assert!(combined_stiffness(0.0, 10.0).is_err());
        assert!(combined_stiffness(-1.0, 10.0).is_err());
    }

    #[test]
    fn thresholds() {
        let force = SensingMode::ForceThreshold { f_s: 3.0 };
        assert_eq!(effective_threshold(force, 123.0).unwrap(), 3.0);
        let pos = SensingMode::PositionErrorThreshold { e_s: 0.03 };
        assert_relative_eq!(effective_threshold(pos, 100.0).unwrap(), 3.0, max_relative = 1e-15);
        assert_relative_eq!(effective_threshold(pos, 200.0).unwrap(), 6.0, max_relative = 1e-15);
        assert!(matches!(
            effective_threshold(pos, 0.0),
            Err(Error::Domain { quantity: "k_s", .. })
        ));
    }

    #[test]
    fn plastic() {
        assert_relative_eq!(plastic_impulse(0.1, 0.5).unwrap(), 0.05);
        assert_eq!(plastic_impulse(0.0, 3.0).unwrap(), 0.0);
        assert_eq!(plastic_impulse(2.0, 0.0).unwrap(), 0.0);
        assert!(plastic_impulse(-0.1, 1.0).is_err());
        assert!(plastic_impulse(0.1, -1.0).is_err());
    }

    #[test]
    fn sensing_phase() {
        let k = 1000.0 / 11.0;
        let t1 = sensing_time(3.0, k, 0.5).unwrap();
        assert_relative_eq!(t1, 0.066, max_relative = 1e-12);
        let stepped = ramp_crossing(3.0, k, 0.5, 1e-7);
        assert!((stepped - t1).abs() <= 1e-7);
        assert_relative_eq!(
            sensing_time(3.0, k, 1.0).unwrap(),
            0.5 * t1,
            max_relative = 1e-15
        );
        assert_eq!(sensing_time(0.0, k, 0.5).unwrap(), 0.0);
        assert!(sensing_time(3.0, 0.0, 0.5).is_err());
        assert!(sensing_time(3.0, k, -0.5).is_err());

        let i2 = sensing_impulse(3.0, k, 0.5).unwrap();
        assert_relative_eq!(i2, 0.099, max_relative = 1e-12);
        let quad = simpson(|t| k * 0.5 * t, 0.0, t1, 100);
        assert_relative_eq!(i2, quad, max_relative = 1e-12);
        assert!(sensing_impulse(3.0, k, 1e9).unwrap() < 1e-9);
        assert_relative_eq!(
            sensing_impulse(3.0, k, 0.703_562_363_973_2).unwrap(),
            0.070_356_236_397,
            max_relative = 1e-9
        );
    }

    #[test]
    fn reaction_phase() {
        let i3 = reaction_impulse(3.0, 1000.0, 10.0).unwrap();
        assert_relative_eq!(i3, 0.048_989_794_855_663_56, max_relative = 1e-12);
        let dur = reaction_duration(3.0, 1000.0, 10.0).unwrap();
        let quad = simpson(|t| 3.0 - 1000.0 * 10.0 * t * t / 2.0, 0.0, dur, 200);
        assert_relative_eq!(i3, quad, max_relative = 1e-12);
        assert_eq!(reaction_impulse(0.0, 1000.0, 10.0).unwrap(), 0.0);
        assert!(reaction_impulse(3.0, 1000.0, 1e12).unwrap() < 1e-6);
        assert!(reaction_impulse(3.0, 0.0, 10.0).is_err());
        assert!(reaction_impulse(3.0, 1000.0, 0.0).is_err());
    }

    #[test]
    fn default_total() {
        let b = total_impulse(&CollisionParams1D::default()).unwrap();
        assert_relative_eq!(b.i_plastic, 0.05, max_relative = 1e-12);
        assert_relative_eq!(b.i_sensing, 0.099, max_relative = 1e-12);
        assert_relative_eq!(b.i_reaction, 0.048_989_794_855_663_56, max_relative = 1e-12);
        assert_relative_eq!(b.total, 0.197_989_794_855_663_56, max_relative = 1e-12);
        assert_eq!(b.total, b.i_plastic + b.i_sensing + b.i_reaction);
        assert_relative_eq!(b.t1, 0.066, max_relative = 1e-12);
        assert!(b.t2 > b.t1);
    }

    #[test]
    fn total_vanishes_with_contact_content() {
        let p = CollisionParams1D {
            m_f: 1e-12,
            sensing: SensingMode::ForceThreshold { f_s: 1e-12 },
            ..Default::default()
        };
        assert!(total_impulse(&p).unwrap().total < 1e-11);
    }

    #[test]
    fn optimum() {
        let k = 1000.0 / 11.0;
        let v = optimal_velocity(3.0, k, 0.1).unwrap();
        assert_relative_eq!(v, 0.703_562_363_973_2, max_relative = 1e-12);
        assert_relative_eq!(
            optimal_velocity(3.0, 4.0 * k, 0.1).unwrap(),
            0.5 * v,
            max_relative = 1e-15
        );
        let p = CollisionParams1D::default().with_velocity(v);
        let b = total_impulse(&p).unwrap();
        assert_relative_eq!(b.i_plastic, b.i_sensing, max_relative = 1e-12);

        let p = CollisionParams1D::default();
        let i_star = minimum_impulse(&p).unwrap();
        assert_relative_eq!(i_star, 0.189_702_267_650_3, max_relative = 1e-9);
        assert_relative_eq!(
            i_star,
            minimum_impulse_bandwidth_form(&p).unwrap(),
            max_relative = 1e-12
        );
        // Dense scan never beats I*.
        for i in 0..=10_000 {
            let v = 1e-3 * (1e4f64).powf(i as f64 / 10_000.0);
            assert!(total_impulse(&p.with_velocity(v)).unwrap().total >= i_star * (1.0 - 1e-14));
        }
    }

    #[test]
    fn infinite_actuation_leaves_sensing_bandwidth_term() {
        let p = CollisionParams1D {
            f_a: 1e18,
            ..Default::default()
        };
        let k = p.sensing_stiffness().unwrap();
        let limit = 3.0 * 2f64.sqrt() / (k / p.m_f).sqrt();
        assert_relative_eq!(minimum_impulse(&p).unwrap(), limit, max_relative = 1e-6);
    }

    #[test]
    fn position_mode_uses_software_stiffness() {
        let p = CollisionParams1D {
            sensing: SensingMode::PositionErrorThreshold { e_s: 0.03 },
            ..Default::default()
        };
        assert_relative_eq!(p.threshold().unwrap(), 3.0, max_relative = 1e-15);
        let same = total_impulse(&CollisionParams1D::default()).unwrap();
        assert_relative_eq!(total_impulse(&p).unwrap().total, same.total, max_relative = 1e-14);
    }

    #[test]
    fn rejects_degenerate_params() {
        let base = CollisionParams1D::default();
        for bad in [
            CollisionParams1D { m_f: 0.0, ..base },
            CollisionParams1D { m_r: -1.0, ..base },
            CollisionParams1D { k_m: 0.0, ..base },
            CollisionParams1D { k_s: -1.0, ..base },
            CollisionParams1D { v_0: 0.0, ..base },
            CollisionParams1D { f_a: f64::NAN, ..base },
            CollisionParams1D {
                sensing: SensingMode::ForceThreshold { f_s: 0.0 },
                ..base
            },
        ] {
            assert!(matches!(total_impulse(&bad), Err(Error::Domain { .. })), "{bad:?}");
        }
    }

    #[test]
    fn software_only_lumping() {
        let p = CollisionParams1D {
            k_s: 400.0,
            k_m: 2e7,
            lumping: StiffnessLumping::SoftwareOnly,
            ..Default::default()
        };
        assert_eq!(p.sensing_stiffness().unwrap(), 400.0);
    }

    #[test]
    fn serde_round_trip() {
        let p = CollisionParams1D {
            sensing: SensingMode::PositionErrorThreshold { e_s: 0.02 },
            ..Default::default()
        };
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"mode\":\"position_error_threshold\""));
        let back: CollisionParams1D = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<CollisionParams1D>(&s.replace("\"m_f\"", "\"mass\"")).is_err());
    }
}
