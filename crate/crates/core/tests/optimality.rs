mod common;

use collision_reflex::reflex::*;
use common::{golden_min, random_params, rel};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn numerical_minimum_is_v_star() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let p = random_params(&mut rng);
        let v_star = optimal_velocity_for(&p).unwrap();
        let found = golden_min(|v| total_impulse(&p.with_velocity(v)).unwrap().total, 1e-4, 100.0, 1e-13);
        assert!(rel(found, v_star) < 1e-6, "{found} vs {v_star}");

        let at = total_impulse(&p.with_velocity(v_star)).unwrap();
        assert!(rel(at.i_plastic, at.i_sensing) < 1e-12);
        assert!(rel(minimum_impulse(&p).unwrap(), minimum_impulse_bandwidth_form(&p).unwrap()) < 1e-12);
    }
}

#[test]
fn counter_intuitive_regime() {
    let p = CollisionParams1D::default();
    let v_star = optimal_velocity_for(&p).unwrap();
    let below: Vec<f64> = (1..=1000).map(|i| v_star * i as f64 / 1001.0).collect();
    let above: Vec<f64> = (0..1000).map(|i| v_star + (10.0 - v_star) * (i + 1) as f64 / 1000.0).collect();
    let total = |v: f64| total_impulse(&p.with_velocity(v)).unwrap().total;
    assert!(below.windows(2).all(|w| total(w[1]) < total(w[0])));
    assert!(above.windows(2).all(|w| total(w[1]) > total(w[0])));
}

proptest! {
    #[test]
    fn total_is_sum_of_phases(seed in any::<u64>()) {
        let p = random_params(&mut ChaCha8Rng::seed_from_u64(seed));
        let b = total_impulse(&p).unwrap();
        prop_assert!(rel(b.i_plastic + b.i_sensing + b.i_reaction, b.total) < 1e-15);
        prop_assert!(b.t1 > 0.0 && b.t2 > b.t1);
    }

    #[test]
    fn total_is_convex_in_velocity(seed in any::<u64>(), a in 0.05f64..5.0, b in 0.05f64..5.0, w in 0.0f64..1.0) {
        let p = random_params(&mut ChaCha8Rng::seed_from_u64(seed));
        let f = |v: f64| total_impulse(&p.with_velocity(v)).unwrap().total;
        let mid = w * a + (1.0 - w) * b;
        prop_assert!(f(mid) <= w * f(a) + (1.0 - w) * f(b) + 1e-12);
    }

    #[test]
    fn reaction_scales_with_force_threshold(seed in any::<u64>(), s in 0.1f64..10.0) {
        let p = random_params(&mut ChaCha8Rng::seed_from_u64(seed));
        let f_s = p.threshold().unwrap();
        let base = reaction_impulse(f_s, p.k_m, p.acceleration()).unwrap();
        let scaled = reaction_impulse(s * f_s, p.k_m, p.acceleration()).unwrap();
        prop_assert!(rel(scaled, base * s.powf(1.5)) < 1e-12);
    }
}
