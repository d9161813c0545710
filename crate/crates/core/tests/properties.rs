use std::collections::BTreeMap;

use al_speedup::curve::{
    build_curve, connected_value, invert_connected, monotone_envelope, CurvePoint, LearningCurve,
};
use al_speedup::fitting::{derive_intercept, fit_b, ApproxModel, FunctionFamily};
use al_speedup::metrics::{
    connected_speed_up, cut_point_test, sensitivity, speed_up_factor, stability_series,
    MetricSelector, StabilityContext,
};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = FunctionFamily> {
    prop_oneof![
        Just(FunctionFamily::ExpSaturating),
        Just(FunctionFamily::Logistic)
    ]
}

/// Grid of distinct increasing x values starting at 0, with per-seed values.
fn curve_input() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>)> {
    (2usize..12, 1usize..5).prop_flat_map(|(len, seeds)| {
        (
            prop::collection::vec(1u32..50, len - 1),
            prop::collection::vec(prop::collection::vec(0.0f64..=1.0, len), seeds),
        )
            .prop_map(|(steps, values)| {
                let mut xs = vec![0.0];
                for s in steps {
                    let last = *xs.last().unwrap();
                    xs.push(last + f64::from(s));
                }
                (xs, values)
            })
    })
}

fn curve(xs: &[f64], values: &[Vec<f64>], id: &str) -> LearningCurve {
    let pts: Vec<CurvePoint> = values
        .iter()
        .enumerate()
        .flat_map(|(s, v)| {
            xs.iter()
                .zip(v)
                .map(move |(&x, &p)| CurvePoint::new(x, p, s as u64))
        })
        .collect();
    build_curve(&pts, id).unwrap()
}

fn model_curve(model: &ApproxModel, x_max: f64, id: &str) -> LearningCurve {
    let pts: Vec<CurvePoint> = (0..=70)
        .map(|i| {
            let x = x_max * i as f64 / 70.0;
            CurvePoint::new(x, model.evaluate(x), 0)
        })
        .collect();
    build_curve(&pts, id).unwrap()
}

proptest! {
    #[test]
    fn points_round_trip((xs, values) in curve_input()) {
        let c = curve(&xs, &values, "qm");
        let rebuilt = build_curve(&c.points(), "qm").unwrap();
        prop_assert_eq!(rebuilt, c);
    }

    #[test]
    fn mean_lies_within_seed_range_and_sem_matches((xs, values) in curve_input()) {
        let c = curve(&xs, &values, "qm");
        let n = values.len() as f64;
        for i in 0..xs.len() {
            let lo = values.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min);
            let hi = values.iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(c.mean()[i] >= lo && c.mean()[i] <= hi);
            prop_assert!((c.sem()[i] * n.sqrt() - c.sd()[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn envelope_is_monotone_dominating_and_idempotent((xs, values) in curve_input()) {
        let c = curve(&xs, &values, "qm");
        let env = monotone_envelope(&c);
        prop_assert!(env.mean().windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(env.mean().iter().zip(c.mean()).all(|(e, m)| e >= m));
        prop_assert_eq!(monotone_envelope(&env), env);
    }

    #[test]
    fn inversion_undoes_connected_value(
        steps in prop::collection::vec((1u32..50, 0.001f64..0.1), 1..10),
        t in 0.0f64..=1.0,
    ) {
        let mut xs = vec![0.0];
        let mut ys = vec![0.05];
        for (dx, dy) in steps {
            xs.push(xs.last().unwrap() + f64::from(dx));
            ys.push(ys.last().unwrap() + dy);
        }
        let c = curve(&xs, &[ys], "qm");
        let x = t * c.x_max();
        let back = invert_connected(&c, connected_value(&c, x).unwrap()).unwrap();
        prop_assert!((back - x).abs() <= 1e-9 * c.x_max());
    }

    #[test]
    fn connected_ratio_tracks_x_rescaling(
        steps in prop::collection::vec((1u32..50, 0.001f64..0.1), 3..10),
        factor in 0.1f64..3.0,
    ) {
        let mut xs = vec![0.0];
        let mut ys = vec![0.05];
        for (dx, dy) in steps {
            xs.push(xs.last().unwrap() + f64::from(dx));
            ys.push(ys.last().unwrap() + dy);
        }
        let rand = curve(&xs, &[ys], "rand");
        let qm = rand.rescale_x(factor).with_qm_id("qm");
        let series = connected_speed_up(&qm, &rand, 50).unwrap();
        prop_assert!(series.ratios.iter().all(|r| (r - factor).abs() <= 1e-9 * factor));
    }

    #[test]
    fn families_satisfy_a1_a2_a3(
        fam in family(),
        a_inf in 0.05f64..=1.0,
        p0_frac in 0.001f64..0.99,
        b1 in 1.0f64..1e4,
        b2 in 1.0f64..1e4,
        u in 0.0f64..5.0,
        du in 0.01f64..1.0,
    ) {
        let a0 = derive_intercept(fam, a_inf, p0_frac * a_inf).unwrap().a0;
        let m1 = ApproxModel { family: fam, a_inf, a0, b: b1 };
        let m2 = ApproxModel { family: fam, a_inf, a0, b: b2 };
        prop_assert_eq!(m1.evaluate(0.0), m2.evaluate(0.0));
        prop_assert!((m1.evaluate(0.0) - p0_frac * a_inf).abs() <= 1e-12);
        prop_assert!((m1.evaluate(1e3 * b1) - a_inf).abs() <= 1e-12);
        prop_assert!(m1.evaluate((u + du) * b1) > m1.evaluate(u * b1));
    }

    #[test]
    fn fit_recovers_b_on_noiseless_data(fam in family(), log_b in 1.0f64..4.0) {
        let b = 10f64.powf(log_b);
        let a0 = derive_intercept(fam, 0.9, 0.2).unwrap().a0;
        let m = ApproxModel { family: fam, a_inf: 0.9, a0, b };
        let c = model_curve(&m, 1400.0, "qm");
        let fit = fit_b(fam, &c, 0.9, a0).unwrap();
        prop_assert!(((fit.b - b) / b).abs() < 1e-3, "b {} fitted {}", b, fit.b);
    }

    #[test]
    fn fitted_b_scales_with_x(fam in family(), log_b in 1.5f64..3.0, factor in 0.2f64..5.0) {
        let b = 10f64.powf(log_b);
        let a0 = derive_intercept(fam, 0.9, 0.2).unwrap().a0;
        let m = ApproxModel { family: fam, a_inf: 0.9, a0, b };
        let c = model_curve(&m, 1400.0, "qm");
        let base = fit_b(fam, &c, 0.9, a0).unwrap().b;
        let scaled = fit_b(fam, &c.rescale_x(factor), 0.9, a0).unwrap().b;
        prop_assert!((scaled / base - factor).abs() <= 1e-6 * factor);
    }

    #[test]
    fn speed_up_factor_is_scale_invariant(bq in 0.1f64..1e4, br in 0.1f64..1e4, c in 1e-3f64..1e3) {
        let s = speed_up_factor(bq, br).unwrap();
        prop_assert!((speed_up_factor(c * bq, c * br).unwrap() - s).abs() <= 1e-12 * s);
    }

    #[test]
    fn sensitivity_symmetric_scale_invariant_and_consistent(
        s1 in 1e-3f64..1e3,
        s2 in 1e-3f64..1e3,
        c in 1e-2f64..1e2,
    ) {
        let a = sensitivity(s1, s2).unwrap();
        let b = sensitivity(s2, s1).unwrap();
        prop_assert_eq!(a, b);
        let scaled = sensitivity(c * s1, c * s2).unwrap();
        prop_assert!((scaled.delta_rel - a.delta_rel).abs() <= 1e-12);
        prop_assert!((scaled.delta_log - a.delta_log).abs() <= 1e-9);
        prop_assert!(a.delta_rel <= a.delta_log + 1e-15);
        if a.delta_rel < 0.10 {
            prop_assert!((a.delta_rel - a.delta_log).abs() < 0.005);
        }
    }

    #[test]
    fn cut_point_ignores_common_halving(
        (xs, values) in curve_input(),
        (_, other) in curve_input(),
    ) {
        prop_assume!(xs.len() >= 4);
        let rand_vals: Vec<Vec<f64>> = (0..values.len())
            .map(|s| (0..xs.len()).map(|i| other[s % other.len()].get(i).copied().unwrap_or(0.5)).collect())
            .collect();
        let qm = curve(&xs, &values, "qm");
        let rand = curve(&xs, &rand_vals, "rand");
        let base = cut_point_test(&qm, &rand, *xs.last().unwrap(), 0.05).unwrap();
        // Halving is exact in binary, so every difference halves and the ranks stay put.
        let bump = |v: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            v.iter().map(|r| r.iter().map(|p| p * 0.5).collect()).collect()
        };
        let qm2 = curve(&xs, &bump(&values), "qm");
        let rand2 = curve(&xs, &bump(&rand_vals), "rand");
        let shifted = cut_point_test(&qm2, &rand2, *xs.last().unwrap(), 0.05).unwrap();
        prop_assert_eq!(base.verdict, shifted.verdict);
    }
}

#[test]
fn speed_up_is_stable_under_truncation_of_model_curves() {
    let fam = FunctionFamily::ExpSaturating;
    let a0 = derive_intercept(fam, 0.9, 0.2).unwrap().a0;
    let mut curves = BTreeMap::new();
    for (id, b) in [("rand", 600.0), ("qm", 150.0)] {
        let m = ApproxModel {
            family: fam,
            a_inf: 0.9,
            a0,
            b,
        };
        curves.insert(id.to_string(), model_curve(&m, 1400.0, id));
    }
    let ctx = StabilityContext {
        a_inf: 0.9,
        family: fam,
        a0,
        alpha: 0.05,
    };
    let budgets = [200.0, 400.0, 800.0, 1400.0];
    let s = stability_series(MetricSelector::SpeedUp, "qm", &curves, &budgets, &ctx).unwrap();
    let lc = stability_series(MetricSelector::LcMean, "qm", &curves, &budgets, &ctx).unwrap();
    assert!(s.dispersion.range_over_mean < 1e-6, "{:?}", s.dispersion);
    assert!(lc.dispersion.range_over_mean > 0.1, "{:?}", lc.dispersion);
}
