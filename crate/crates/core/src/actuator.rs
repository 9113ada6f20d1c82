//! Motor and gearbox scaling laws, scaled-motor synthesis and the
//! rotary-to-translational conversions used by the impulse sweeps.

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Error, Result};

/// Geometric and electromagnetic description of a rotary actuator (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotorSpec {
    /// Stator outer diameter, m. Only ratios between motors matter for scaling.
    pub r: f64,
    /// Stack height, m.
    pub l: f64,
    /// Rotor inertia, kg·m².
    pub j_m: f64,
    /// Continuous torque, N·m.
    pub tau_c: f64,
    /// Peak torque, N·m.
    pub tau_p: f64,
    /// Gear ratio (≥ 1).
    pub n: f64,
}

impl MotorSpec {
    /// Celera Motion Omni+ OPN-060-013-A frameless motor, direct drive.
    pub const M2: MotorSpec = MotorSpec {
        r: 0.060,
        l: 0.0125,
        j_m: 2.21e-5,
        tau_c: 0.524,
        tau_p: 1.3,
        n: 1.0,
    };

    pub fn validate(&self) -> Result<()> {
        positive("r", self.r)?;
        positive("l", self.l)?;
        positive("J_m", self.j_m)?;
        positive("tau_c", self.tau_c)?;
        positive("tau_p", self.tau_p)?;
        if !(self.n.is_finite() && self.n >= 1.0) {
            return Err(Error::domain("N", self.n, "gear ratio must be >= 1"));
        }
        if self.tau_p < self.tau_c {
            return Err(Error::domain("tau_p", self.tau_p, "peak torque must be >= continuous torque"));
        }
        Ok(())
    }

    /// Rotor inertia seen at the output, `N² J_m`.
    pub fn reflected_inertia(&self) -> f64 {
        self.n * self.n * self.j_m
    }

    /// Peak torque at the output, `N tau_p`.
    pub fn output_peak_torque(&self) -> f64 {
        self.n * self.tau_p
    }
}

/// Exponents of a monomial `l^l · r^r · N^n · a^stages`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub l: f64,
    pub r: f64,
    pub n: f64,
    pub stages: f64,
}

impl Monomial {
    const fn lrn(l: f64, r: f64, n: f64) -> Self {
        Self { l, r, n, stages: 0.0 }
    }

    const fn lrna(l: f64, r: f64, n: f64, stages: f64) -> Self {
        Self { l, r, n, stages }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    Motor,
    Gearbox,
}

/// Proportionality law for mass, (reflected) inertia and torque.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingLaw {
    pub name: String,
    pub kind: LawKind,
    pub mass: Monomial,
    pub inertia: Monomial,
    pub torque: Monomial,
}

impl ScalingLaw {
    fn new(name: &str, kind: LawKind, mass: Monomial, inertia: Monomial, torque: Monomial) -> Self {
        Self {
            name: name.to_owned(),
            kind,
            mass,
            inertia,
            torque,
        }
    }

    /// Exponent `p` in `J_m ∝ tau^p` when only the radius varies.
    pub fn inertia_torque_exponent(&self) -> f64 {
        self.inertia.r / self.torque.r
    }
}

pub const ELECTRICAL_THERMAL: &str = "w/ electrical & thermal";

pub fn builtin_laws() -> Vec<ScalingLaw> {
    use LawKind::{Gearbox, Motor};
    vec![
        ScalingLaw::new(
            "Isometric",
            Motor,
            Monomial::lrn(1.0, 2.0, 0.0),
            Monomial::lrn(1.0, 4.0, 2.0),
            Monomial::lrn(1.0, 4.0, 0.0),
        ),
        ScalingLaw::new(
            "Empirical",
            Motor,
            Monomial::lrn(1.0, 2.0, 0.0),
            Monomial::lrn(1.0, 4.0, 2.0),
            Monomial::lrn(1.0, 2.8, 0.0),
        ),
        ScalingLaw::new(
            "Quadruped design",
            Motor,
            Monomial::lrn(1.0, 1.0, 0.0),
            Monomial::lrn(1.0, 3.0, 2.0),
            Monomial::lrn(1.0, 2.0, 0.0),
        ),
        ScalingLaw::new(
            ELECTRICAL_THERMAL,
            Motor,
            Monomial::lrn(1.0, 2.0, 0.0),
            Monomial::lrn(1.0, 4.0, 2.0),
            Monomial::lrn(1.0, 2.5, 0.0),
        ),
        ScalingLaw::new(
            "Parallel Shaft",
            Gearbox,
            Monomial::lrn(1.0, 2.0, 0.0),
            Monomial::lrna(1.0, 4.0, 2.0, -1.0),
            Monomial::lrna(1.0, 2.0, 0.0, -1.0),
        ),
        ScalingLaw::new(
            "Planetary",
            Gearbox,
            Monomial::lrn(1.0, 2.0, 0.0),
            Monomial::lrna(1.0, 4.0, 2.0, -1.0),
            Monomial::lrna(1.0, 2.0, 0.0, -1.0),
        ),
        ScalingLaw::new(
            "Harmonic Drive",
            Gearbox,
            Monomial::lrn(1.0, 2.0, 0.0),
            Monomial::lrn(1.0, 4.0, 2.0),
            Monomial::lrn(0.0, 3.0, 0.0),
        ),
        ScalingLaw::new(
            "Cycloidal Drive",
            Gearbox,
            Monomial::lrn(1.0, 2.0, 0.0),
            Monomial::lrn(1.0, 4.0, 2.0),
            Monomial::lrn(-1.0, 4.0, 0.0),
        ),
        ScalingLaw::new(
            "Ball Screw",
            Gearbox,
            Monomial::lrn(1.0, 2.0, 0.0),
            Monomial::lrn(1.0, 4.0, 0.0),
            Monomial::lrn(0.0, 3.0, 0.0),
        ),
    ]
}

/// Looks up a built-in law by name (case-insensitive).
pub fn law_by_name(name: &str) -> Option<ScalingLaw> {
    builtin_laws()
        .into_iter()
        .find(|law| law.name.eq_ignore_ascii_case(name))
}

/// Scales a direct-drive reference motor to stator size `r_new`, keeping the
/// stack height, and adds the gear ratio needed to keep the output peak
/// torque at `torque_floor`.
pub fn scale_motor(
    reference: &MotorSpec,
    r_new: f64,
    law: &ScalingLaw,
    torque_floor: f64,
) -> Result<MotorSpec> {
    reference.validate()?;
    positive("r_new", r_new)?;
    non_negative("torque_floor", torque_floor)?;
    if law.kind != LawKind::Motor {
        return Err(Error::InvalidModel(format!(
            "'{}' is a gearbox law; motor scaling needs a motor law",
            law.name
        )));
    }
    if reference.n != 1.0 {
        return Err(Error::domain("N", reference.n, "reference motor must be direct drive (N = 1)"));
    }

    let ratio = r_new / reference.r;
    let torque_scale = ratio.powf(law.torque.r);
    let j_m = reference.j_m * ratio.powf(law.inertia.r);
    let tau_c = reference.tau_c * torque_scale;
    let tau_p = reference.tau_p * torque_scale;
    for (name, v) in [("J_m", j_m), ("tau_c", tau_c), ("tau_p", tau_p)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::domain(name, v, "scaled value is not finite and positive"));
        }
    }
    let n = (torque_floor / tau_p).max(1.0);
    Ok(MotorSpec {
        r: r_new,
        l: reference.l,
        j_m,
        tau_c,
        tau_p,
        n,
    })
}

/// Equivalent translational mass of the reflected inertia at `link_length`.
pub fn reflected_mass_at_link(motor: &MotorSpec, link_length: f64) -> Result<f64> {
    positive("link_length", link_length)?;
    Ok(motor.reflected_inertia() / (link_length * link_length))
}

/// Peak output force at `link_length`.
pub fn force_capability_at_link(motor: &MotorSpec, link_length: f64) -> Result<f64> {
    positive("link_length", link_length)?;
    Ok(motor.output_peak_torque() / link_length)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn et() -> ScalingLaw {
        law_by_name(ELECTRICAL_THERMAL).unwrap()
    }

    #[test]
    fn table_rows() {
        let law = et();
        assert_eq!((law.torque.l, law.torque.r), (1.0, 2.5));
        assert_eq!((law.inertia.l, law.inertia.r, law.inertia.n), (1.0, 4.0, 2.0));
        let iso = law_by_name("isometric").unwrap();
        assert_eq!((iso.inertia.l, iso.inertia.r, iso.inertia.n), (1.0, 4.0, 2.0));
        let quad = law_by_name("Quadruped design").unwrap();
        assert_eq!((quad.torque.l, quad.torque.r), (1.0, 2.0));
        assert_eq!(builtin_laws().len(), 9);
        let ball = law_by_name("Ball Screw").unwrap();
        assert_eq!(ball.inertia.n, 0.0);
        assert_eq!(law_by_name("Planetary").unwrap().torque.stages, -1.0);
    }

    #[test]
    fn electrical_thermal_inertia_torque_exponent() {
        assert!((et().inertia_torque_exponent() - 1.6).abs() < 1e-12);
        assert!((law_by_name("Isometric").unwrap().inertia_torque_exponent() - 1.0).abs() < 1e-12);
        assert!((law_by_name("Quadruped design").unwrap().inertia_torque_exponent() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn scales_m2_down_to_m1() {
        let m1 = scale_motor(&MotorSpec::M2, 0.010, &et(), 1.3).unwrap();
        assert_relative_eq!(m1.j_m, 1.71e-8, max_relative = 0.01);
        assert_relative_eq!(m1.tau_c, 5.94e-3, max_relative = 0.01);
        assert_relative_eq!(m1.tau_p, 1.47e-2, max_relative = 0.01);
        assert_relative_eq!(m1.n, 88.18, max_relative = 0.01);
        assert_relative_eq!(m1.reflected_inertia(), 1.33e-4, max_relative = 0.01);
        assert_relative_eq!(m1.output_peak_torque(), 1.3, max_relative = 1e-12);
        assert_eq!(m1.l, MotorSpec::M2.l);
    }

    #[test]
    fn scales_m2_up_to_m3() {
        let m3 = scale_motor(&MotorSpec::M2, 0.100, &et(), 1.3).unwrap();
        assert_relative_eq!(m3.j_m, 1.71e-4, max_relative = 0.01);
        assert_relative_eq!(m3.tau_c, 1.879, max_relative = 0.01);
        assert_relative_eq!(m3.tau_p, 4.661, max_relative = 0.01);
        assert_eq!(m3.n, 1.0);
        assert_relative_eq!(m3.reflected_inertia(), 1.71e-4, max_relative = 0.01);
    }

    #[test]
    fn identity_scaling() {
        let same = scale_motor(&MotorSpec::M2, MotorSpec::M2.r, &et(), 1.3).unwrap();
        assert_eq!(same, MotorSpec::M2);
    }

    #[test]
    fn scaling_rejects_bad_input() {
        assert!(scale_motor(&MotorSpec::M2, 0.0, &et(), 1.3).is_err());
        assert!(scale_motor(&MotorSpec::M2, f64::INFINITY, &et(), 1.3).is_err());
        let geared = MotorSpec { n: 9.0, ..MotorSpec::M2 };
        assert!(scale_motor(&geared, 0.01, &et(), 1.3).is_err());
        let gearbox = law_by_name("Harmonic Drive").unwrap();
        assert!(scale_motor(&MotorSpec::M2, 0.01, &gearbox, 1.3).is_err());
    }

    #[test]
    fn link_conversions() {
        let m1 = MotorSpec {
            j_m: 1.33e-4,
            ..MotorSpec::M2
        };
        let m = reflected_mass_at_link(&m1, 0.1143).unwrap();
        assert_relative_eq!(m, 0.010_180_4, max_relative = 1e-4);
        assert_relative_eq!(
            reflected_mass_at_link(&m1, 0.2286).unwrap(),
            m / 4.0,
            max_relative = 1e-14
        );
        assert!(reflected_mass_at_link(&m1, 0.0).is_err());

        let f = force_capability_at_link(&MotorSpec::M2, 0.1143).unwrap();
        assert_relative_eq!(f, 11.373_578, max_relative = 1e-6);
        assert_relative_eq!(
            force_capability_at_link(&MotorSpec::M2, 0.2286).unwrap(),
            f / 2.0,
            max_relative = 1e-14
        );
        assert!(force_capability_at_link(&MotorSpec::M2, -1.0).is_err());

        let idle = MotorSpec {
            j_m: 0.0,
            tau_p: 0.0,
            ..MotorSpec::M2
        };
        assert_eq!(reflected_mass_at_link(&idle, 0.1).unwrap(), 0.0);
        assert_eq!(force_capability_at_link(&idle, 0.1).unwrap(), 0.0);
    }
}
