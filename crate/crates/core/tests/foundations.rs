use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;

use workstats::protocol::{DrivingProtocol, ProtocolSpec};
use workstats::quadrature::{
    integrate_halfline, integrate_halfline_split, integrate_interval, OscillatoryTail, QuadSpec,
};
use workstats::relaxation::{default_omega_grid, ModelSpec, RelaxationModel};
use workstats::special::{bessel_j, coth_half, struve_h, x_coth_half};

fn gamma_half_integer(n: u32) -> f64 {
    // Γ(n + 3/2) = Γ(½) Π_{k=0}^{n} (k + ½)
    (0..=n).fold(PI.sqrt(), |acc, k| acc * (k as f64 + 0.5))
}

#[test]
fn gamma_helper_is_right() {
    assert_relative_eq!(gamma_half_integer(0), PI.sqrt() / 2.0, max_relative = 1e-15);
    assert_relative_eq!(gamma_half_integer(1), 0.75 * PI.sqrt(), max_relative = 1e-15);
}

#[test]
fn parseval_for_piecewise_ramps() {
    let knots = [(0.0, 0.0), (0.7, 1.2), (1.5, 0.4), (2.5, 1.0)];
    let proto = DrivingProtocol::piecewise_linear(0.8, &knots).unwrap();
    let energy: f64 = knots
        .windows(2)
        .map(|w| {
            let rate = 0.8 * (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            rate * rate * (w[1].0 - w[0].0)
        })
        .sum();
    let f = |w: f64| proto.spectral_weight(w);
    let mean = |w: f64| proto.spectral_mean(w);
    let rem = |w: f64| proto.oscillating_tail(&|_| 1.0, w);
    let tail = OscillatoryTail {
        mean: &mean,
        remainder: &rem,
        min_cut: 10.0,
    };
    let spec = QuadSpec::default()
        .with_rel_tol(1e-9)
        .with_period(proto.oscillation_period());
    let got = integrate_halfline_split(&f, &tail, &spec).unwrap();
    // ∫_ℝ S = 2π ∫ λ̇², and S is even
    assert_relative_eq!(got.value, PI * energy, max_relative = 1e-7);
}

#[test]
fn protocol_json_round_trip() {
    let p = DrivingProtocol::piecewise_linear(0.5, &[(0.0, 0.0), (1.0, 1.0), (3.0, 0.2)]).unwrap();
    let spec = ProtocolSpec::from(p.clone());
    let text = serde_json::to_string(&spec).unwrap();
    let back: ProtocolSpec = serde_json::from_str(&text).unwrap();
    assert_eq!(DrivingProtocol::try_from(back).unwrap(), p);
}

#[test]
fn model_json_round_trip() {
    for m in [
        RelaxationModel::overdamped(1.5, 0.5).unwrap(),
        RelaxationModel::underdamped(1.0, 1.0, 4.0).unwrap(),
        RelaxationModel::bessel(2.0, 3.0).unwrap(),
    ] {
        let text = serde_json::to_string(&ModelSpec::from(m.clone())).unwrap();
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(RelaxationModel::try_from(back).unwrap(), m);
    }
}

#[test]
fn model_json_rejects_unknown_fields() {
    let r: Result<ModelSpec, _> =
        serde_json::from_str(r#"{"kind": "overdamped", "psi0": 1, "gamma": 1, "nu": 2}"#);
    assert!(r.is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bessel_integral_identity(x in 0.1f64..40.0) {
        // ∫₀^x J₁ = 1 − J₀(x)
        let f = |t: f64| bessel_j(1, t).unwrap();
        let got = integrate_interval(&f, 0.0, x, &QuadSpec::default()).unwrap().value;
        prop_assert!((got - (1.0 - bessel_j(0, x).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn struve_integral_identity(x in 0.1f64..40.0) {
        // (t H₁(t))' = t H₀(t)
        let f = |t: f64| t * struve_h(0, t).unwrap();
        let got = integrate_interval(&f, 0.0, x, &QuadSpec::default()).unwrap().value;
        let want = x * struve_h(1, x).unwrap();
        prop_assert!((got - want).abs() < 1e-11 * (1.0 + want.abs()));
    }

    #[test]
    fn struve_small_argument_series(x in 1e-4f64..0.05) {
        // leading term of H₁: (x/2)²/(Γ(3/2)Γ(5/2))
        let lead = 0.25 * x * x / (gamma_half_integer(0) * gamma_half_integer(1));
        prop_assert!((struve_h(1, x).unwrap() / lead - 1.0).abs() < x * x);
    }

    #[test]
    fn coth_half_bounds(x in 1e-6f64..50.0) {
        prop_assert!(coth_half(x) >= 1.0);
        prop_assert!(x_coth_half(x) >= 2.0);
        prop_assert!((x_coth_half(x) - x * coth_half(x)).abs() <= 1e-12 * x_coth_half(x));
    }

    #[test]
    fn quadrature_integrates_gaussians(a in 0.1f64..5.0, c in -2.0f64..2.0) {
        // ∫_0^∞ e^{−a(x−c)²} = ½√(π/a)(1 + erf(c√a)); checked on the full
        // interval against the split at c
        let f = |x: f64| (-a * (x - c).powi(2)).exp();
        let spec = QuadSpec::default().with_length_scale(1.0 / a.sqrt());
        let whole = integrate_halfline(&f, &spec).unwrap().value;
        let left = if c > 0.0 { integrate_interval(&f, 0.0, c, &spec).unwrap().value } else { 0.0 };
        let right = integrate_halfline(&|x: f64| f(x + c.max(0.0)), &spec).unwrap().value;
        prop_assert!((whole - left - right).abs() < 1e-9 * whole);
        if c <= 0.0 {
            prop_assert!(right <= 0.5 * (PI / a).sqrt());
        }
    }

    #[test]
    fn quadrature_is_exact_on_polynomials(c0 in -3.0f64..3.0, c1 in -3.0f64..3.0,
                                          c2 in -3.0f64..3.0, b in 0.1f64..4.0) {
        let f = |x: f64| c0 + c1 * x + c2 * x * x;
        let want = c0 * b + c1 * b * b / 2.0 + c2 * b * b * b / 3.0;
        let got = integrate_interval(&f, 0.0, b, &QuadSpec::default()).unwrap().value;
        prop_assert!((got - want).abs() < 1e-12 * (1.0 + want.abs()));
    }

    #[test]
    fn phenomenological_models_are_valid(psi0 in 0.1f64..5.0, gamma in 0.1f64..5.0,
                                         ratio in 0.1f64..20.0, which in 0usize..3) {
        let m = match which {
            0 => RelaxationModel::overdamped(psi0, gamma),
            1 => RelaxationModel::underdamped(psi0, gamma, ratio * gamma),
            _ => RelaxationModel::bessel(psi0, gamma),
        }.unwrap();
        let report = m.validate(&default_omega_grid(&m, 200, 50.0));
        prop_assert!(report.passed);
        prop_assert!((m.eval_time(0.0).unwrap() - psi0).abs() < 1e-12 * psi0);
    }

    #[test]
    fn spectral_weight_is_even_and_bounded(alpha in 0.01f64..3.0, tau in 0.05f64..20.0, w in 0.0f64..100.0) {
        let p = DrivingProtocol::linear(alpha, tau).unwrap();
        let s = p.spectral_weight(w);
        prop_assert!((s - p.spectral_weight(-w)).abs() <= 1e-14 * alpha * alpha);
        // |∫λ̇ e^{iωt}| ≤ ∫|λ̇| = α
        prop_assert!(s <= alpha * alpha * (1.0 + 1e-14));
    }
}
