//! Reaction–diffusion estimates against closed forms and finer quadratures.

use std::f64::consts::TAU;

use pullback::rde::{
    f_sample_grid, noise_integral, radius_terms, verify_f_conditions, weighted_past_integral,
    weighted_past_integral_with_step, FCertificate, Nonlinearity, RdCocycle, RdParams, SpatialProfile, StateVector,
    TemporalProfile, F_MARGIN_TOLERANCE,
};
use pullback::{Error, OuProcess, WienerPath};

fn small(params: RdParams) -> RdCocycle {
    RdCocycle::new(RdParams {
        ell: 8.0,
        interior: 79,
        dt: 2e-3,
        ..params
    })
    .unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn past_integral_constant() {
    for (c, lambda, tau) in [(1.0, 1.0, 0.0), (2.5, 0.3, -7.0), (0.1, 4.0, 12.0)] {
        let got = weighted_past_integral(&TemporalProfile::Constant { value: c }, lambda, tau).unwrap();
        assert!(rel(got.value, c * c / lambda) < 1e-7, "{got:?}");
        assert!(got.tail < 1e-12);
    }
}

#[test]
fn past_integral_periodic() {
    // sin² = (1 − cos 2ωs)/2, and ∫₋∞^τ e^{λ(s−τ)} cos(2ωs) ds is the real
    // part of e^{2iωτ}/(λ + 2iω).
    let period = 3.0;
    let w = TAU / period;
    for (lambda, tau) in [(1.0, 0.0), (0.5, 1.3), (2.0, -4.2)] {
        let c = (lambda * (2.0 * w * tau).cos() + 2.0 * w * (2.0 * w * tau).sin()) / (lambda * lambda + 4.0 * w * w);
        let expect = 0.5 / lambda - 0.5 * c;
        let got = weighted_past_integral(&TemporalProfile::Periodic { period }, lambda, tau).unwrap();
        assert!(rel(got.value, expect) < 1e-8, "{} vs {expect}", got.value);
    }
}

#[test]
fn past_integral_saturating() {
    let (r, lambda) = (0.5, 1.0);
    let g = TemporalProfile::Saturating { rate: r };
    for tau in [-3.0, 0.0, 2.0] {
        let expect = if tau <= 0.0 {
            (2.0 * r * tau).exp() / (lambda + 2.0 * r)
        } else {
            (-lambda * tau).exp() / (lambda + 2.0 * r) - (-lambda * tau).exp_m1() / lambda
        };
        let got = weighted_past_integral(&g, lambda, tau).unwrap();
        assert!(rel(got.value, expect) < 1e-9, "tau {tau}: {} vs {expect}", got.value);
        let fine = weighted_past_integral_with_step(&g, lambda, tau, 1e-3).unwrap();
        assert!(rel(fine.value, got.value) < 1e-9);
    }
}

#[test]
fn past_integral_diverges_when_forcing_grows_fast() {
    let g = TemporalProfile::PastGrowing { rate: 1.0 };
    assert!(matches!(weighted_past_integral(&g, 1.0, 0.0), Err(Error::Divergent(_))));
    assert!(weighted_past_integral(&TemporalProfile::PastGrowing { rate: 0.25 }, 1.0, 0.0).is_ok());
}

#[test]
fn noise_integral_matches_finer_quadrature() {
    let sys = small(RdParams::default());
    for seed in [0, 7, 123] {
        let omega = WienerPath::sample(seed, -50.0, 1.0, sys.dt_path()).unwrap();
        let (coarse, tail) = noise_integral(&sys, &omega, 1).unwrap();
        let (fine, _) = noise_integral(&sys, &omega, 8).unwrap();
        assert!(rel(coarse, fine) < 1e-5, "seed {seed}: {coarse} vs {fine}");
        assert!(tail < 1e-5 * fine);
        let terms = radius_terms(&sys, 0.0, &omega).unwrap();
        assert_eq!(terms.noise, coarse);
        assert!(terms.absorbing(1.0) > terms.energy(1.0));
    }
}

#[test]
fn ou_variance() {
    let lambda = 1.0;
    let n = 512;
    let mean_sq = (0..n)
        .map(|seed| {
            let w = WienerPath::sample(seed, -40.0, 0.0, 0.01).unwrap();
            OuProcess::new(&w, lambda).unwrap().value().powi(2)
        })
        .sum::<f64>()
        / n as f64;
    let expect = 0.5 / lambda;
    // four standard errors of the mean of z²
    let se = (2.0f64).sqrt() * expect / (n as f64).sqrt();
    assert!((mean_sq - expect).abs() < 4.0 * se, "{mean_sq}");
}

#[test]
fn zero_noise_coefficient_reduces_to_transformed_equation() {
    let sys = small(RdParams {
        h: SpatialProfile::Zero,
        ..RdParams::default()
    });
    let omega = WienerPath::sample(3, -50.0, 10.0, sys.dt_path()).unwrap();
    let u0 = StateVector::from_fn(sys.grid(), |x| 2.0 * (-x * x / 4.0).exp());
    let (tau, t) = (1.0, 2.0);
    let u = sys.cocycle_phi(t, tau, &omega.shift(tau).unwrap(), &u0).unwrap();
    let v = sys.solve_v(tau, tau + t, &omega, &u0, false).unwrap().v;
    assert!(u.axpy(-1.0, &v).l2_norm() <= 1e-12 * v.l2_norm());
}

#[test]
fn f_conditions() {
    let (xs, ss) = f_sample_grid(8.0, 16, 20.0, 400);
    let cert = FCertificate::default();
    verify_f_conditions(&Nonlinearity::negative_cubic(), &cert, 4.0, &xs, &ss).unwrap();

    let wrong_sign = Nonlinearity {
        coeffs: vec![0.0, 0.0, 0.0, 1.0],
        source: SpatialProfile::Zero,
    };
    match verify_f_conditions(&wrong_sign, &cert, 4.0, &xs, &ss) {
        Err(Error::ConditionViolated { condition, .. }) => assert_eq!(condition, "f1"),
        other => panic!("expected a violation, got {other:?}"),
    }

    // s − s³ needs ∂f/∂s ≤ 1 and a constant in the first two bounds.
    let bistable = Nonlinearity {
        coeffs: vec![0.0, 1.0, 0.0, -1.0],
        source: SpatialProfile::Zero,
    };
    match verify_f_conditions(&bistable, &cert, 4.0, &xs, &ss) {
        Err(Error::ConditionViolated { .. }) => {}
        other => panic!("expected a violation, got {other:?}"),
    }
    let fitted = FCertificate {
        alpha1: 0.5,
        alpha2: 2.0,
        alpha3: 1.0,
        psi1: SpatialProfile::Constant { value: 0.5 },
        psi2: SpatialProfile::Constant { value: 1.0 },
        psi3: SpatialProfile::Zero,
    };
    let m = verify_f_conditions(&bistable, &fitted, 4.0, &xs, &ss).unwrap();
    assert!(m.min() >= F_MARGIN_TOLERANCE, "{m:?}");
}
