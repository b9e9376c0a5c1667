//! Property tests for the invariants that cut across modules.

use proptest::prelude::*;

use pullback::cocycle::{check_cocycle, CocycleSample};
use pullback::setops::{hausdorff, Engine, PointCloud};
use pullback::testbeds::{bistable_evolve, linear_evolve, Forcing, ScalarLinearSDE};
use pullback::{Cocycle, FamilySpec, PullbackSchedule, TimeShift, WienerPath};

const DT: f64 = 0.01;

fn steps(range: std::ops::Range<i64>) -> impl Strategy<Value = f64> {
    range.prop_map(|k| k as f64 * DT)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn time_shift_group_law(h in -1e3f64..1e3, s in -1e3f64..1e3, t in -1e3f64..1e3) {
        let th = TimeShift;
        let lhs = th.apply(s, th.apply(t, h));
        let rhs = h + s + t;
        prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * (h.abs() + s.abs() + t.abs()));
    }

    #[test]
    fn path_shift_group_law(seed in any::<u64>(), a in steps(-300..300), b in steps(-300..300)) {
        let w = WienerPath::sample(seed, -3.0, 3.0, DT).unwrap();
        let two = w.shift(a).unwrap().shift(b).unwrap();
        let one = w.shift(a + b).unwrap();
        for t in [-2.0, -0.5, 0.0, 1.25, 2.0] {
            prop_assert_eq!(two.value_at(t).unwrap(), one.value_at(t).unwrap());
        }
    }

    #[test]
    fn shifted_path_is_rebased(seed in any::<u64>(), s in steps(-200..200), t in steps(-100..100)) {
        let w = WienerPath::sample(seed, -3.0, 3.0, DT).unwrap();
        let ws = w.shift(s).unwrap();
        let expect = w.value_at(t + s).unwrap() - w.value_at(s).unwrap();
        prop_assert!((ws.value_at(t).unwrap() - expect).abs() <= 1e-12);
    }

    #[test]
    fn sampling_is_deterministic_and_window_free(seed in any::<u64>(), lo in 1i64..500, hi in 1i64..500) {
        let a = WienerPath::sample(seed, -(lo as f64) * DT, hi as f64 * DT, DT).unwrap();
        let b = WienerPath::sample(seed, -5.0, 5.0, DT).unwrap();
        for t in [-(lo as f64) * DT, 0.0, hi as f64 * DT] {
            prop_assert_eq!(a.value_at(t).unwrap(), b.value_at(t).unwrap());
        }
    }

    #[test]
    fn linear_cocycle_composes(seed in any::<u64>(), tau in steps(-500..500), t in steps(0..300),
                               s in steps(0..300), x in -10.0f64..10.0) {
        let sys = ScalarLinearSDE::new(0.7, Forcing::Sinusoid { amplitude: 1.3, frequency: 2.0, phase: 0.4 }, true, DT).unwrap();
        let omega = WienerPath::sample(seed, -10.0, 10.0, DT).unwrap();
        let r = check_cocycle(&sys, t, s, &[CocycleSample { tau, omega, x }]).unwrap();
        prop_assert!(r.absolute <= 1e-12, "{}", r.absolute);
    }

    #[test]
    fn linear_evolution_contracts(seed in any::<u64>(), t in steps(0..500), x in -10.0f64..10.0, y in -10.0f64..10.0) {
        let sys = ScalarLinearSDE::new(1.0, Forcing::Constant { value: 1.0 }, true, DT).unwrap();
        let w = WienerPath::sample(seed, -1.0, 6.0, DT).unwrap();
        let a = linear_evolve(t, 0.0, &w, x, &sys).unwrap();
        let b = linear_evolve(t, 0.0, &w, y, &sys).unwrap();
        let expect = (-t).exp() * (x - y).abs();
        prop_assert!(((a - b).abs() - expect).abs() <= 1e-12 * (1.0 + (x - y).abs()));
    }

    #[test]
    fn bistable_preserves_sign_and_order(t in 0.0f64..30.0, x in -5.0f64..5.0, y in -5.0f64..5.0) {
        let (a, b) = (bistable_evolve(t, x).unwrap(), bistable_evolve(t, y).unwrap());
        prop_assert_eq!(a.signum() == x.signum(), true);
        if x < y {
            prop_assert!(a <= b);
        }
        prop_assert!(a.abs() <= x.abs().max(1.0) + 1e-15);
    }

    #[test]
    fn hausdorff_is_symmetric(a in prop::collection::vec(-5.0f64..5.0, 1..20),
                              b in prop::collection::vec(-5.0f64..5.0, 1..20)) {
        let (a, b) = (PointCloud::new(a), PointCloud::new(b));
        prop_assert_eq!(hausdorff(&a, &b).unwrap(), hausdorff(&b, &a).unwrap());
    }
}

#[test]
fn engine_is_deterministic() {
    let sys = ScalarLinearSDE::new(1.0, Forcing::Constant { value: 1.0 }, true, DT).unwrap();
    let family = sys.absorbing_family(0.1);
    let schedule = PullbackSchedule::new(vec![5.0, 10.0], 1e-3, 1).unwrap();
    let run = || {
        let w = WienerPath::sample(42, -30.0, 1.0, DT).unwrap();
        Engine::new(&sys)
            .attractor_section(&family, 0.5, &w, &schedule)
            .unwrap()
            .cloud
    };
    assert_eq!(run().points(), run().points());
}

#[test]
fn omega_limit_of_the_section_is_itself() {
    // Ω-limit idempotence: pulling back the computed section reproduces it.
    let sys = ScalarLinearSDE::new(1.0, Forcing::Constant { value: 1.0 }, true, DT).unwrap();
    let schedule = PullbackSchedule::new(vec![10.0, 20.0, 30.0], 1e-6, 1).unwrap();
    let w = WienerPath::sample(3, -60.0, 1.0, DT).unwrap();
    let engine = Engine::new(&sys);
    let att = engine
        .attractor_section(&sys.absorbing_family(0.05), 0.0, &w, &schedule)
        .unwrap();
    let sys2 = sys.clone();
    let section = FamilySpec::from_fn(
        "section",
        move |tau, w| PointCloud::singleton(sys2.attractor_point(tau, w).unwrap()),
        |_, _| f64::INFINITY,
    );
    let again = engine.omega_limit(&section, 0.0, &w, &schedule).unwrap();
    assert!(hausdorff(&again.cloud, &att.cloud).unwrap() <= 2.0 * schedule.convergence_tol);
    assert_eq!(sys.name(), "linear-sde");
}
