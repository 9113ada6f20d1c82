//! Subcommands: flag handling and execution.

use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use collision_reflex::actuator::{force_capability_at_link, reflected_mass_at_link, scale_motor};
use collision_reflex::manipulator::{
    self, eigenvalues, reflex_surface, InertiaSelector, SURFACE_COLUMNS,
};
use collision_reflex::reflex::{
    minimum_impulse, minimum_impulse_bandwidth_form, optimal_velocity_for, total_impulse,
    CollisionParams1D, SensingMode,
};
use collision_reflex::sim::{simulate, SimOptions, SpikeModel};
use collision_reflex::sweep::{sweep, Spacing, SweepAxis, SweepGrid, SweepVariable};
use collision_reflex::trace::{
    fit_trace, integrate_trace, read_trace, segment_trace, write_trace_to, IntegrationMethod,
};
use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::output::{json_num, num, Report, Table};
use crate::CliError;

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form phase impulses and total for the `params` section
    Impulse(ImpulseArgs),
    /// Impulse-minimizing velocity and the minimum impulse
    Vstar,
    /// Total impulse over one or two parameter axes
    Sweep(SweepArgs),
    /// Scale the reference motor to a new stator size
    ScaleMotor(ScaleMotorArgs),
    /// Two-link collision reflex surface over all directions
    Surface(SurfaceArgs),
    /// Inertia ellipsoids, IMF and directional metrics at one configuration
    Metrics(MetricsArgs),
    /// Simulated force trace of one collision
    Simulate(SimulateArgs),
    /// Impulse of a recorded force trace
    Integrate(IntegrateArgs),
    /// Fit the collision model to a recorded force trace
    Fit(FitArgs),
    /// Closed form against the simulator on random parameter sets
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct ImpulseArgs {
    /// Pre-impact velocity, m/s
    #[arg(long)]
    v0: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Axis as VARIABLE:MIN:MAX:COUNT[:linear|log]; VARIABLE is v0, k_m, k_s or
    /// motor_radius (m). Repeat for a two-axis grid.
    #[arg(long = "axis", value_name = "SPEC", value_parser = parse_axis)]
    axes: Vec<SweepAxis>,
}

#[derive(Debug, Args)]
pub struct ScaleMotorArgs {
    /// Target stator diameter, mm
    #[arg(long)]
    r_mm: Option<f64>,
    /// Scaling law name
    #[arg(long)]
    law: Option<String>,
    /// Output peak torque to restore with a gearbox, N·m
    #[arg(long)]
    torque_floor: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    /// Shoulder angle, degrees
    #[arg(long)]
    q1_deg: Option<f64>,
    /// Elbow angle relative to link 1, degrees
    #[arg(long)]
    q2_deg: Option<f64>,
    /// Pre-impact speed, m/s
    #[arg(long)]
    v0: Option<f64>,
    /// Force threshold, N
    #[arg(long)]
    fs: Option<f64>,
    /// Number of directions
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    q1_deg: Option<f64>,
    #[arg(long)]
    q2_deg: Option<f64>,
    /// Direction for effective mass and stiffness, degrees
    #[arg(long)]
    direction_deg: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SpikeArg {
    Instantaneous,
    HalfSine,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    v0: Option<f64>,
    /// Time step, s
    #[arg(long)]
    dt: Option<f64>,
    /// Force noise standard deviation, N
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    spike: Option<SpikeArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Trapezoid,
    GaussKronrod,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    /// Trace CSV (t_s,force_n); defaults to io.input
    trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "gauss-kronrod")]
    method: MethodArg,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Trace CSV (t_s,force_n); defaults to io.input
    trace: Option<PathBuf>,
    /// Known pre-impact velocity, m/s
    #[arg(long)]
    v0: Option<f64>,
    /// Known mechanical stiffness, N/m
    #[arg(long)]
    k_m: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Number of random parameter sets
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Largest accepted relative difference
    #[arg(long, default_value_t = 0.02)]
    tolerance: f64,
}

fn parse_axis(spec: &str) -> Result<SweepAxis, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if !(4..=5).contains(&parts.len()) {
        return Err(format!("expected VARIABLE:MIN:MAX:COUNT[:SPACING], got `{spec}`"));
    }
    let variable: SweepVariable = serde_json::from_value(Value::String(parts[0].into()))
        .map_err(|_| format!("unknown sweep variable `{}` (v0, k_m, k_s, motor_radius)", parts[0]))?;
    let number = |s: &str| s.parse::<f64>().map_err(|_| format!("`{s}` is not a number"));
    let count = parts[3].parse::<usize>().map_err(|_| format!("`{}` is not a count", parts[3]))?;
    let spacing = match parts.get(4) {
        None | Some(&"linear") => Spacing::Linear,
        Some(&"log") => Spacing::Log,
        Some(other) => return Err(format!("unknown spacing `{other}` (linear, log)")),
    };
    Ok(SweepAxis::new(variable, number(parts[1])?, number(parts[2])?, count, spacing))
}

pub struct Outcome {
    pub report: Report,
    /// Reported after the output is written.
    pub failure: Option<CliError>,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Self { report, failure: None }
    }
}

fn matrix(m: &Matrix2<f64>) -> Value {
    json!([[json_num(m[(0, 0)]), json_num(m[(0, 1)])], [json_num(m[(1, 0)]), json_num(m[(1, 1)])]])
}

fn to_json(value: impl serde::Serialize) -> Value {
    serde_json::to_value(value).expect("result serializes")
}

impl Command {
    /// Folds subcommand flags into the configuration.
    pub fn apply_flags(&self, mut c: RunConfig) -> Result<RunConfig, CliError> {
        let deg = |x: f64| x.to_radians();
        match self {
            Command::Impulse(a) => {
                if let Some(v) = a.v0 {
                    c.params.v_0 = v;
                }
            }
            Command::Vstar | Command::Validate(_) => {}
            Command::Sweep(a) => {
                if !a.axes.is_empty() {
                    c.sweep.axes = a.axes.clone();
                }
            }
            Command::ScaleMotor(a) => {
                if let Some(r) = a.r_mm {
                    c.motor.r = r * 1e-3;
                }
                if let Some(law) = &a.law {
                    c.motor.law = law.clone();
                }
                if let Some(t) = a.torque_floor {
                    c.motor.torque_floor = t;
                }
            }
            Command::Surface(a) => {
                let q = &mut c.model.configuration;
                if let Some(x) = a.q1_deg {
                    q.q1 = deg(x);
                }
                if let Some(x) = a.q2_deg {
                    q.q2 = deg(x);
                }
                if let Some(v) = a.v0 {
                    c.model.v_0 = v;
                }
                if let Some(f) = a.fs {
                    c.model.f_s = f;
                }
                if let Some(n) = a.n {
                    c.model.directions = n;
                }
            }
            Command::Metrics(a) => {
                let q = &mut c.model.configuration;
                if let Some(x) = a.q1_deg {
                    q.q1 = deg(x);
                }
                if let Some(x) = a.q2_deg {
                    q.q2 = deg(x);
                }
                if let Some(x) = a.direction_deg {
                    c.model.direction = deg(x);
                }
            }
            Command::Simulate(a) => {
                if let Some(v) = a.v0 {
                    c.params.v_0 = v;
                }
                if let Some(dt) = a.dt {
                    c.sim.dt = dt;
                }
                if let Some(s) = a.noise {
                    c.sim.noise_sigma = s;
                }
                if let Some(s) = a.seed {
                    c.sim.seed = s;
                }
                match a.spike {
                    Some(SpikeArg::Instantaneous) => c.sim.spike = SpikeModel::Instantaneous,
                    Some(SpikeArg::HalfSine) if !matches!(c.sim.spike, SpikeModel::HalfSine { .. }) => {
                        c.sim.spike = SpikeModel::default()
                    }
                    _ => {}
                }
            }
            Command::Integrate(a) => {
                if let Some(p) = &a.trace {
                    c.io.input = Some(p.clone());
                }
            }
            Command::Fit(a) => {
                if let Some(p) = &a.trace {
                    c.io.input = Some(p.clone());
                }
                if let Some(v) = a.v0 {
                    c.params.v_0 = v;
                }
                if let Some(k) = a.k_m {
                    c.params.k_m = k;
                }
            }
        }
        Ok(c)
    }

    pub fn run(&self, c: &RunConfig) -> Result<Outcome, CliError> {
        match self {
            Command::Impulse(_) => impulse(c).map(Into::into),
            Command::Vstar => vstar(c).map(Into::into),
            Command::Sweep(_) => run_sweep(c).map(Into::into),
            Command::ScaleMotor(_) => run_scale_motor(c).map(Into::into),
            Command::Surface(_) => surface(c).map(Into::into),
            Command::Metrics(_) => metrics(c).map(Into::into),
            Command::Simulate(_) => run_simulate(c).map(Into::into),
            Command::Integrate(a) => integrate(c, a.method),
            Command::Fit(_) => fit(c),
            Command::Validate(a) => validate(c, a),
        }
    }
}

fn impulse(c: &RunConfig) -> Result<Report, CliError> {
    let p = &c.params;
    let b = total_impulse(p)?;
    let json = json!({
        "params": p,
        "f_s": p.threshold()?,
        "k": p.sensing_stiffness()?,
        "a": p.acceleration(),
        "breakdown": b,
    });
    Ok(Report::json(json))
}

fn vstar(c: &RunConfig) -> Result<Report, CliError> {
    let p = &c.params;
    let v = optimal_velocity_for(p)?;
    let json = json!({
        "params": p,
        "v_star": v,
        "minimum_impulse": minimum_impulse(p)?,
        "minimum_impulse_bandwidth_form": minimum_impulse_bandwidth_form(p)?,
        "omega_a": (p.k_m / p.m_r).sqrt(),
        "breakdown": total_impulse(&p.with_velocity(v))?,
    });
    Ok(Report::json(json))
}

fn run_sweep(c: &RunConfig) -> Result<Report, CliError> {
    let grid = SweepGrid {
        axes: c.sweep.axes.clone(),
        base: c.params,
    };
    let needs_motor = grid.axes.iter().any(|a| a.variable == SweepVariable::MotorRadius);
    let motor = if needs_motor { Some(c.motor.source()?) } else { None };
    let table = sweep(&grid, motor.as_ref())?;
    let mut csv = Table::new(table.header());
    for row in &table.rows {
        let mut cells: Vec<String> = row.axis_values.iter().map(|&x| num(x)).collect();
        cells.extend(row.values().iter().map(|&x| num(x)));
        cells.push(if row.feasible { "1" } else { "0" }.into());
        csv.rows.push(cells);
    }
    Ok(Report::with_table(to_json(&table), csv))
}

fn run_scale_motor(c: &RunConfig) -> Result<Report, CliError> {
    let m = &c.motor;
    let law = m.scaling_law()?;
    let scaled = scale_motor(&m.reference, m.r, &law, m.torque_floor)?;
    let json = json!({
        "law": law.name,
        "reference": m.reference,
        "motor": scaled,
        "reflected_inertia": scaled.reflected_inertia(),
        "output_peak_torque": scaled.output_peak_torque(),
        "link_length": m.link_length,
        "reflected_mass": reflected_mass_at_link(&scaled, m.link_length)?,
        "force_capability": force_capability_at_link(&scaled, m.link_length)?,
    });
    Ok(Report::json(json))
}

fn surface(c: &RunConfig) -> Result<Report, CliError> {
    let m = &c.model;
    let s = reflex_surface(&m.arm, &m.configuration, m.v_0, m.f_s, m.directions)?;
    let mut table = Table::new(SURFACE_COLUMNS);
    for point in &s.points {
        let mut cells: Vec<String> = point.values().iter().map(|&x| num(x)).collect();
        cells.push(point.flag.as_str().into());
        table.rows.push(cells);
    }
    let json = json!({
        "configuration": m.configuration,
        "v_0": m.v_0,
        "f_s": m.f_s,
        "points": s.points,
    });
    Ok(Report::with_table(json, table))
}

fn metrics(c: &RunConfig) -> Result<Report, CliError> {
    let (model, q) = (&c.model.arm, &c.model.configuration);
    let (s, co) = c.model.direction.sin_cos();
    let u = [co, s];
    let ellipsoid = |m: Matrix2<f64>| {
        let (lo, hi) = eigenvalues(&m);
        json!({ "matrix": matrix(&m), "eigenvalues": [lo, hi] })
    };
    let eff = |sel| manipulator::effective_mass(model, q, u, sel).map(json_num);
    // Quantities that need J^-1 are null at a singular configuration.
    let unless_singular = |r: collision_reflex::Result<Value>| match r {
        Err(collision_reflex::Error::SingularConfiguration { .. }) => Ok(Value::Null),
        other => other,
    };
    let j = manipulator::jacobian(model, q);
    let json = json!({
        "configuration": q,
        "end_effector": manipulator::end_effector(model, q).as_slice(),
        "jacobian": matrix(&j),
        "det_jacobian": j.determinant(),
        "mass_matrix": matrix(&manipulator::mass_matrix(model, q)),
        "actuator_inertia": matrix(&manipulator::actuator_inertia(model)),
        "gie": unless_singular(manipulator::gie(model, q).map(ellipsoid))?,
        "dme": ellipsoid(manipulator::dme(model, q)?),
        "imf": unless_singular(manipulator::imf(model, q).map(json_num))?,
        "direction": {
            "theta": c.model.direction,
            "u": u,
            "effective_mass": {
                "full": eff(InertiaSelector::Full)?,
                "structure": eff(InertiaSelector::Structure)?,
                "actuators": eff(InertiaSelector::Actuators)?,
            },
            "task_stiffness": unless_singular(manipulator::task_stiffness(model, q, u).map(json_num))?,
            "task_force_limit": unless_singular(manipulator::task_force_limit(model, q, u).map(json_num))?,
        },
    });
    Ok(Report::json(json))
}

fn run_simulate(c: &RunConfig) -> Result<Report, CliError> {
    let r = simulate(&c.params, &c.sim)?;
    let mut csv = Vec::new();
    write_trace_to(&r.trace, &mut csv).map_err(|e| CliError::Io(e.to_string()))?;
    let json = json!({
        "params": c.params,
        "sim": c.sim,
        "events": r.events,
        "integrated": r.integrated,
        "closed_form": total_impulse(&c.params)?,
        "t_s": r.trace.times(),
        "force_n": r.trace.forces(),
    });
    Ok(Report {
        json,
        table: None,
        csv: Some(csv),
    })
}

fn input_trace(c: &RunConfig) -> Result<collision_reflex::trace::ForceTrace, CliError> {
    let path = c
        .io
        .input
        .as_ref()
        .ok_or_else(|| CliError::Usage("no trace given (pass a path or set io.input)".into()))?;
    Ok(read_trace(path)?)
}

fn integrate(c: &RunConfig, method: MethodArg) -> Result<Outcome, CliError> {
    let trace = input_trace(c)?;
    let trapezoid = integrate_trace(&trace, IntegrationMethod::Trapezoid)?;
    let gk = integrate_trace(&trace, IntegrationMethod::GaussKronrod)?;
    let impulse = match method {
        MethodArg::Trapezoid => trapezoid,
        MethodArg::GaussKronrod => gk,
    };
    let json = json!({
        "source": trace.label,
        "samples": trace.len(),
        "sample_rate": trace.sample_rate,
        "method": to_json(match method {
            MethodArg::Trapezoid => IntegrationMethod::Trapezoid,
            MethodArg::GaussKronrod => IntegrationMethod::GaussKronrod,
        }),
        "impulse": impulse,
        "trapezoid": trapezoid,
        "gauss_kronrod": gk,
        "relative_difference": json_num((gk - trapezoid).abs() / gk.abs()),
        "segmentation": segment_trace(&trace).ok(),
    });
    Ok(Report::json(json).into())
}

fn fit(c: &RunConfig) -> Result<Outcome, CliError> {
    let trace = input_trace(c)?;
    let result = fit_trace(&trace, c.params.k_m, c.params.v_0)?;
    let failure = (!result.converged)
        .then(|| CliError::Domain(format!("fit did not converge after {} iterations", result.iterations)));
    Ok(Outcome {
        report: Report::json(to_json(result)),
        failure,
    })
}

/// Random valid parameter set: masses, stiffnesses, threshold, speed and
/// reaction force drawn uniformly from moderate ranges.
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

const VALIDATE_COLUMNS: [&str; 13] = [
    "index", "m_f_kg", "m_r_kg", "k_m_npm", "k_s_npm", "f_s_n", "v0_mps", "f_a_n", "closed_ns",
    "simulated_ns", "trace_ns", "rel_err", "pass",
];

fn validate(c: &RunConfig, a: &ValidateArgs) -> Result<Outcome, CliError> {
    if a.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    if !(a.tolerance.is_finite() && a.tolerance > 0.0) {
        return Err(CliError::Usage("--tolerance must be positive".into()));
    }
    let seed = a.seed.unwrap_or(c.sim.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sets: Vec<CollisionParams1D> = (0..a.count).map(|_| random_params(&mut rng)).collect();
    // Noise would only blur the sample-based total; the check is noise free.
    let opt = SimOptions {
        noise_sigma: 0.0,
        ..c.sim
    };

    let results = sets
        .par_iter()
        .map(|p| -> Result<(f64, f64, f64), CliError> {
            let closed = total_impulse(p)?.total;
            let r = simulate(p, &opt)?;
            let trace = integrate_trace(&r.trace, IntegrationMethod::Trapezoid)?;
            Ok((closed, r.integrated.total, trace))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(VALIDATE_COLUMNS);
    let mut rows = Vec::new();
    let (mut worst, mut failures) = (0.0f64, 0usize);
    for (i, (p, &(closed, simulated, trace))) in sets.iter().zip(&results).enumerate() {
        let err = ((simulated - closed).abs().max((trace - closed).abs())) / closed;
        let pass = err < a.tolerance;
        worst = worst.max(err);
        failures += usize::from(!pass);
        let f_s = p.threshold()?;
        table.rows.push(
            std::iter::once(i.to_string())
                .chain([p.m_f, p.m_r, p.k_m, p.k_s, f_s, p.v_0, p.f_a, closed, simulated, trace, err].map(num))
                .chain(std::iter::once(if pass { "1" } else { "0" }.to_string()))
                .collect(),
        );
        rows.push(json!({
            "params": p, "closed": closed, "simulated": simulated, "trace": trace,
            "rel_err": err, "pass": pass,
        }));
    }
    let json = json!({
        "count": a.count,
        "seed": seed,
        "dt": opt.dt,
        "tolerance": a.tolerance,
        "max_rel_err": worst,
        "failures": failures,
        "rows": rows,
    });
    let failure = (failures > 0).then(|| {
        CliError::Domain(format!(
            "{failures} of {} sets differ by more than {} (worst {worst:.3e})",
            a.count, a.tolerance
        ))
    });
    Ok(Outcome {
        report: Report::with_table(json, table),
        failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_specs() {
        let a = parse_axis("v0:0.01:10:50:log").unwrap();
        assert_eq!(a, SweepAxis::new(SweepVariable::V0, 0.01, 10.0, 50, Spacing::Log));
        let b = parse_axis("motor_radius:0.01:0.1:10").unwrap();
        assert_eq!(b.variable, SweepVariable::MotorRadius);
        assert_eq!(b.spacing, Spacing::Linear);
        assert_eq!(parse_axis("k_s:0:100:3").unwrap().variable, SweepVariable::KS);
        assert!(parse_axis("speed:0:1:3").is_err());
        assert!(parse_axis("v0:0:1").is_err());
        assert!(parse_axis("v0:0:1:3:cubic").is_err());
    }
}
