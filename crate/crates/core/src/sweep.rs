//! Parameter sweeps over pre-impact velocity, motor size and stiffness.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actuator::{
    force_capability_at_link, law_by_name, reflected_mass_at_link, scale_motor, MotorSpec,
    ScalingLaw, ELECTRICAL_THERMAL,
};
use crate::error::{positive, Error, Result};
use crate::reflex::{total_impulse, CollisionParams1D, PhaseBreakdown};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Pre-impact velocity, m/s.
    V0,
    /// Stator diameter of a motor scaled from a reference, m.
    MotorRadius,
    /// Mechanical stiffness `k_m`, N/m.
    KM,
    /// Software stiffness `k_s`, N/m.
    KS,
}

impl SweepVariable {
    pub fn column(self) -> &'static str {
        match self {
            SweepVariable::V0 => "axis_v0_mps",
            SweepVariable::MotorRadius => "axis_r_m",
            SweepVariable::KM => "axis_k_m_npm",
            SweepVariable::KS => "axis_k_s_npm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub variable: SweepVariable,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl SweepAxis {
    pub fn new(variable: SweepVariable, min: f64, max: f64, count: usize, spacing: Spacing) -> Self {
        Self {
            variable,
            min,
            max,
            count,
            spacing,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::domain("count", self.count as f64, "sweep axes need at least 2 points"));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::domain("min", self.min, "axis needs finite min < max"));
        }
        if self.spacing == Spacing::Log || self.variable != SweepVariable::KS {
            positive("axis min", self.min)?;
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let s = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.min + s * (self.max - self.min),
                    Spacing::Log => self.min * (self.max / self.min).powf(s),
                }
            })
            .collect()
    }
}

/// Reference motor and scaling law used when a sweep axis is the motor size.
///
/// At each radius the scaled motor's reflected inertia, expressed as a mass at
/// `link_length`, is added to both the finger and the robot mass of the base
/// parameters, and `F_a` becomes the peak output force at `link_length`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotorSource {
    pub reference: MotorSpec,
    pub law: ScalingLaw,
    pub torque_floor: f64,
    pub link_length: f64,
    /// Rows needing a larger gear ratio are flagged infeasible.
    #[serde(default)]
    pub max_gear_ratio: Option<f64>,
}

impl MotorSource {
    /// The direct-drive reference scaled with the electrical/thermal law, the
    /// torque floor set to its own peak torque, acting at a 114.3 mm link.
    pub fn reference_m2() -> Self {
        Self {
            reference: MotorSpec::M2,
            law: law_by_name(ELECTRICAL_THERMAL).expect("built-in law"),
            torque_floor: MotorSpec::M2.tau_p,
            link_length: 0.1143,
            max_gear_ratio: None,
        }
    }

    fn apply(&self, base: &CollisionParams1D, r: f64) -> Result<(CollisionParams1D, f64)> {
        let motor = scale_motor(&self.reference, r, &self.law, self.torque_floor)?;
        if let Some(max) = self.max_gear_ratio {
            if motor.n > max {
                return Err(Error::domain("N", motor.n, "gear ratio exceeds max_gear_ratio"));
            }
        }
        let m = reflected_mass_at_link(&motor, self.link_length)?;
        let p = CollisionParams1D {
            m_f: base.m_f + m,
            m_r: base.m_r + m,
            f_a: force_capability_at_link(&motor, self.link_length)?,
            ..*base
        };
        Ok((p, motor.n))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub axes: Vec<SweepAxis>,
    pub base: CollisionParams1D,
}

impl SweepGrid {
    pub fn validate(&self, motor: Option<&MotorSource>) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::domain("axes", self.axes.len() as f64, "a sweep has 1 or 2 axes"));
        }
        if self.axes.len() == 2 && self.axes[0].variable == self.axes[1].variable {
            return Err(Error::InvalidModel("sweep axes must be distinct".into()));
        }
        for axis in &self.axes {
            axis.validate()?;
            if axis.variable == SweepVariable::MotorRadius && motor.is_none() {
                return Err(Error::InvalidModel(
                    "a motor-radius axis needs a reference motor and scaling law".into(),
                ));
            }
        }
        Ok(())
    }

    /// Velocity × motor-size grid: 10–100 mm stator, 0.01–10 m/s, with the
    /// 1 kN/m / 100 N/m / 3 N stiffness and threshold setting and light
    /// fingertip/structure masses.
    pub fn velocity_radius_study() -> (Self, MotorSource) {
        let grid = SweepGrid {
            axes: vec![
                SweepAxis::new(SweepVariable::V0, 0.01, 10.0, 120, Spacing::Log),
                SweepAxis::new(SweepVariable::MotorRadius, 0.010, 0.100, 91, Spacing::Linear),
            ],
            base: CollisionParams1D {
                m_f: 0.02,
                m_r: 0.02,
                ..CollisionParams1D::default()
            },
        };
        (grid, MotorSource::reference_m2())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_values: Vec<f64>,
    /// Resolved parameters; absent when the point could not be built.
    pub params: Option<CollisionParams1D>,
    pub f_s: Option<f64>,
    pub gear_ratio: Option<f64>,
    pub breakdown: Option<PhaseBreakdown>,
    pub feasible: bool,
    pub reason: Option<String>,
}

impl SweepRow {
    /// Numeric cells in table order (after the axis columns); NaN marks a gap.
    pub fn values(&self) -> [f64; 13] {
        let nan = f64::NAN;
        let p = self.params;
        let b = self.breakdown;
        [
            p.map_or(nan, |p| p.m_f),
            p.map_or(nan, |p| p.m_r),
            p.map_or(nan, |p| p.k_m),
            p.map_or(nan, |p| p.k_s),
            self.f_s.unwrap_or(nan),
            p.map_or(nan, |p| p.v_0),
            p.map_or(nan, |p| p.f_a),
            b.map_or(nan, |b| b.t1),
            b.map_or(nan, |b| b.t2),
            b.map_or(nan, |b| b.i_plastic),
            b.map_or(nan, |b| b.i_sensing),
            b.map_or(nan, |b| b.i_reaction),
            b.map_or(nan, |b| b.total),
        ]
    }
}

pub const SWEEP_COLUMNS: [&str; 14] = [
    "m_f_kg", "m_r_kg", "k_m_npm", "k_s_npm", "f_s_n", "v0_mps", "f_a_n", "t1_s", "t2_s", "i1_ns",
    "i2_ns", "i3_ns", "total_ns", "feasible",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axes: Vec<SweepVariable>,
    pub rows: Vec<SweepRow>,
    /// Index of the feasible row with the smallest total impulse.
    pub argmin: Option<usize>,
}

impl SweepTable {
    pub fn header(&self) -> Vec<&'static str> {
        self.axes
            .iter()
            .map(|v| v.column())
            .chain(SWEEP_COLUMNS)
            .collect()
    }

    pub fn minimum(&self) -> Option<&SweepRow> {
        self.argmin.map(|i| &self.rows[i])
    }
}

fn evaluate_point(
    base: &CollisionParams1D,
    vars: &[SweepVariable],
    values: &[f64],
    motor: Option<&MotorSource>,
) -> SweepRow {
    let mut p = *base;
    let mut radius = None;
    for (&var, &x) in vars.iter().zip(values) {
        match var {
            SweepVariable::V0 => p.v_0 = x,
            SweepVariable::KM => p.k_m = x,
            SweepVariable::KS => p.k_s = x,
            SweepVariable::MotorRadius => radius = Some(x),
        }
    }
    let mut gear_ratio = None;
    let resolved = match (radius, motor) {
        (Some(r), Some(source)) => source.apply(&p, r).map(|(p, n)| {
            gear_ratio = Some(n);
            p
        }),
        _ => Ok(p),
    };
    let outcome = resolved.and_then(|p| {
        let b = total_impulse(&p)?;
        Ok((p, p.threshold()?, b))
    });
    match outcome {
        Ok((p, f_s, b)) => SweepRow {
            axis_values: values.to_vec(),
            params: Some(p),
            f_s: Some(f_s),
            gear_ratio,
            breakdown: Some(b),
            feasible: true,
            reason: None,
        },
        Err(e) => SweepRow {
            axis_values: values.to_vec(),
            params: None,
            f_s: None,
            gear_ratio,
            breakdown: None,
            feasible: false,
            reason: Some(e.to_string()),
        },
    }
}

/// Evaluates the total impulse at every grid point. Points that cannot be
/// built are flagged infeasible; the grid itself must be valid.
pub fn sweep(grid: &SweepGrid, motor: Option<&MotorSource>) -> Result<SweepTable> {
    grid.validate(motor)?;
    let vars: Vec<SweepVariable> = grid.axes.iter().map(|a| a.variable).collect();
    let points: Vec<Vec<f64>> = match grid.axes.as_slice() {
        [a] => a.values().into_iter().map(|x| vec![x]).collect(),
        [a, b] => {
            let bv = b.values();
            a.values()
                .into_iter()
                .flat_map(|x| bv.iter().map(move |&y| vec![x, y]))
                .collect()
        }
        _ => unreachable!("validated axis count"),
    };
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|pt| evaluate_point(&grid.base, &vars, pt, motor))
        .collect();
    let argmin = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.breakdown.map(|b| (i, b.total)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i);
    Ok(SweepTable {
        axes: vars,
        rows,
        argmin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reflex::{optimal_velocity_for, SensingMode};

    fn totals(t: &SweepTable) -> Vec<f64> {
        t.rows.iter().map(|r| r.breakdown.unwrap().total).collect()
    }

    #[test]
    fn velocity_sweep_is_valley_shaped() {
        let grid = SweepGrid {
            axes: vec![SweepAxis::new(SweepVariable::V0, 0.05, 3.0, 300, Spacing::Linear)],
            base: CollisionParams1D::default(),
        };
        let table = sweep(&grid, None).unwrap();
        let tot = totals(&table);
        let m = table.argmin.unwrap();
        assert!(tot[..=m].windows(2).all(|w| w[1] < w[0]));
        assert!(tot[m..].windows(2).all(|w| w[1] > w[0]));
        let v_star = optimal_velocity_for(&grid.base).unwrap();
        let step = (3.0 - 0.05) / 299.0;
        assert!((table.rows[m].axis_values[0] - v_star).abs() <= step);
    }

    #[test]
    fn stiffness_trends_by_sensing_mode() {
        let force = SweepGrid {
            axes: vec![SweepAxis::new(SweepVariable::KM, 200.0, 2e4, 100, Spacing::Log)],
            base: CollisionParams1D::default(),
        };
        let t = totals(&sweep(&force, None).unwrap());
        assert!(t.windows(2).all(|w| w[1] <= w[0]));

        let position = SweepGrid {
            axes: vec![SweepAxis::new(SweepVariable::KS, 20.0, 2000.0, 100, Spacing::Log)],
            base: CollisionParams1D {
                sensing: SensingMode::PositionErrorThreshold { e_s: 0.03 },
                ..Default::default()
            },
        };
        let t = totals(&sweep(&position, None).unwrap());
        assert!(t.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn motor_sweep_reports_gear_ratio_and_flags_infeasible_rows() {
        let (mut grid, mut source) = SweepGrid::velocity_radius_study();
        grid.axes = vec![SweepAxis::new(SweepVariable::MotorRadius, 0.01, 0.1, 10, Spacing::Linear)];
        source.max_gear_ratio = Some(10.0);
        let t = sweep(&grid, Some(&source)).unwrap();
        let first = &t.rows[0];
        assert!(!first.feasible);
        assert!(first.reason.as_deref().unwrap().contains("gear ratio"));
        let last = t.rows.last().unwrap();
        assert!(last.feasible);
        assert_eq!(last.gear_ratio, Some(1.0));
        assert!(t.minimum().unwrap().feasible);
    }

    #[test]
    fn position_mode_with_zero_software_stiffness_is_flagged() {
        let grid = SweepGrid {
            axes: vec![SweepAxis::new(SweepVariable::KS, 0.0, 100.0, 5, Spacing::Linear)],
            base: CollisionParams1D {
                sensing: SensingMode::PositionErrorThreshold { e_s: 0.03 },
                ..Default::default()
            },
        };
        let t = sweep(&grid, None).unwrap();
        assert!(!t.rows[0].feasible);
        assert!(t.rows[1..].iter().all(|r| r.feasible));
        assert!(t.rows[0].values()[12].is_nan());
    }

    #[test]
    fn invalid_grids() {
        let base = CollisionParams1D::default();
        let bad = |axes| SweepGrid { axes, base };
        let ax = |count, min, max| SweepAxis::new(SweepVariable::V0, min, max, count, Spacing::Linear);
        assert!(sweep(&bad(vec![ax(1, 0.1, 1.0)]), None).is_err());
        assert!(sweep(&bad(vec![ax(5, 1.0, 0.1)]), None).is_err());
        assert!(sweep(&bad(vec![]), None).is_err());
        assert!(sweep(&bad(vec![ax(5, 0.1, 1.0), ax(5, 0.1, 1.0)]), None).is_err());
        let radius = SweepAxis::new(SweepVariable::MotorRadius, 0.01, 0.1, 5, Spacing::Linear);
        assert!(sweep(&bad(vec![radius]), None).is_err());
    }

    #[test]
    fn row_order_is_axis_major() {
        let grid = SweepGrid {
            axes: vec![
                SweepAxis::new(SweepVariable::V0, 0.1, 0.2, 2, Spacing::Linear),
                SweepAxis::new(SweepVariable::KM, 1e3, 1e4, 3, Spacing::Log),
            ],
            base: CollisionParams1D::default(),
        };
        let t = sweep(&grid, None).unwrap();
        let pts: Vec<_> = t.rows.iter().map(|r| r.axis_values.clone()).collect();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0][0], 0.1);
        assert_eq!(pts[2][0], 0.1);
        assert_eq!(pts[3][0], 0.2);
        assert_eq!(t.header()[..2], ["axis_v0_mps", "axis_k_m_npm"]);
        assert_eq!(t.header().len(), 16);
    }
}
