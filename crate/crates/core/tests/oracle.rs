mod common;

use collision_reflex::reflex::{optimal_velocity_for, total_impulse, CollisionParams1D};
use collision_reflex::sim::{simulate, simulated_impulse, SimOptions, SpikeModel};
use collision_reflex::trace::quadrature::trapezoid;
use common::{random_params, rel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn random_sets(seed: u64, n: usize) -> Vec<CollisionParams1D> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_params(&mut rng)).collect()
}

#[test]
fn simulation_matches_closed_form_for_random_sets() {
    let sets = random_sets(1, 100);
    let errors: Vec<(f64, f64)> = sets
        .par_iter()
        .map(|p| {
            let closed = total_impulse(p).unwrap().total;
            let r = simulate(p, &SimOptions::default()).unwrap();
            (rel(r.integrated.total, closed), rel(trapezoid(&r.trace), closed))
        })
        .collect();
    for (i, (integrated, sampled)) in errors.iter().enumerate() {
        assert!(*integrated < 0.02, "set {i}: {integrated}");
        assert!(*sampled < 0.02, "set {i}: {sampled}");
    }
}

#[test]
fn halving_dt_changes_total_by_less_than_half_percent() {
    for p in random_sets(2, 10) {
        let coarse = simulated_impulse(&p, &SimOptions::default()).unwrap().total;
        let fine = simulated_impulse(&p, &SimOptions { dt: 5e-6, ..Default::default() }).unwrap().total;
        assert!(rel(coarse, fine) < 5e-3);
    }
}

#[test]
fn detection_within_one_step_for_instantaneous_spike() {
    let opt = SimOptions { spike: SpikeModel::Instantaneous, ..Default::default() };
    for p in random_sets(3, 20) {
        let r = simulate(&p, &opt).unwrap();
        assert!((r.events.detection - total_impulse(&p).unwrap().t1).abs() <= opt.dt);
    }
}

#[test]
fn identical_seed_gives_identical_trace() {
    let p = random_sets(4, 1)[0];
    let opt = SimOptions { noise_sigma: 0.05, seed: 1234, ..Default::default() };
    let a = simulate(&p, &opt).unwrap().trace;
    let b = simulate(&p, &opt).unwrap().trace;
    assert!(a.forces().iter().zip(b.forces()).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert!(a.times().iter().zip(b.times()).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn phase_impulses_partition_and_balance_at_optimum() {
    for p in random_sets(5, 20) {
        let v = optimal_velocity_for(&p).unwrap();
        let p = p.with_velocity(v);
        let b = simulated_impulse(&p, &SimOptions::default()).unwrap();
        assert!(rel(b.i_plastic, b.i_sensing) < 0.03);
        let whole = trapezoid(&simulate(&p, &SimOptions::default()).unwrap().trace);
        assert!(rel(b.i_plastic + b.i_sensing + b.i_reaction, whole) < 1e-6);
    }
}

#[test]
fn reaction_impulse_scales_with_sqrt_robot_mass() {
    let p = CollisionParams1D::default();
    let opt = SimOptions::default();
    let base = simulated_impulse(&p, &opt).unwrap().i_reaction;
    for factor in [4.0, 16.0, 100.0] {
        let heavy = simulated_impulse(&CollisionParams1D { m_r: p.m_r * factor, ..p }, &opt).unwrap();
        assert!(rel(heavy.i_reaction / base, factor.sqrt()) < 0.01);
    }
}
