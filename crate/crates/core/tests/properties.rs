use proptest::prelude::*;
use rita_core::{
    duration_set, empirical_test_survival, jackknife_se, mdri, naive_incidence, omega_s, proportions,
    residual_frr, rita_incidence, screen, standard_rita_incidence, treatment_screening_survival, CalibrationCurve,
    DurationSet, JackknifeConfig, ProportionSet, ReferenceParams, ReplicateWeights, Respondent, ScreeningConfig,
    ScreeningSurvival, SurveyDataset, TreatmentUptake, Variant, WeightSel,
};

/// Nonincreasing values in [0, 1] built from cumulative decrements.
fn decreasing(n: usize) -> impl Strategy<Value = Vec<f64>> {
    (0.0..1.0f64, prop::collection::vec(0.0..1.0f64, n - 1)).prop_map(|(start, steps)| {
        let total: f64 = steps.iter().sum::<f64>().max(1e-12);
        let mut v = 1.0 - start * 0.3;
        let span = v * 0.95;
        let mut out = vec![v];
        for s in steps {
            v -= span * s / total;
            out.push(v.max(0.0));
        }
        out
    })
}

fn curve(n: usize) -> impl Strategy<Value = CalibrationCurve> {
    decreasing(n).prop_map(|v| CalibrationCurve::uniform(2.0, v).unwrap())
}

fn screening(n: usize) -> impl Strategy<Value = ScreeningSurvival> {
    decreasing(n).prop_map(|v| ScreeningSurvival::from_values(2.0, v).unwrap())
}

fn consistent_inputs() -> impl Strategy<Value = (ProportionSet, ReferenceParams, DurationSet)> {
    (
        0.02..0.5f64,
        0.05..1.0f64,
        0.0..0.3f64,
        0.0..0.01f64,
        0.1..0.6f64,
        0.3..1.0f64,
        0.5..1.0f64,
    )
        .prop_map(|(p_h, p_s_given_h, p_r_given_s, beta, omega_r, s_frac, rs_frac)| {
            let tau = 2.0;
            let omega_s = s_frac * tau;
            let omega_rs = rs_frac * omega_r.min(omega_s);
            let p = ProportionSet::new(p_h, p_s_given_h, p_r_given_s, None, 1e4).unwrap();
            let reference = ReferenceParams::new(beta, tau, omega_r).unwrap();
            let d = DurationSet { omega_r, omega_s, omega_rs, tau, variant: Variant::Rita3 };
            (p, reference, d)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mdri_bounded_and_monotone_in_tau(q in curve(41), t1 in 0.01..2.0f64, t2 in 0.01..2.0f64) {
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        let a = mdri(&q, lo).unwrap().years;
        let b = mdri(&q, hi).unwrap().years;
        prop_assert!(a >= 0.0 && a <= lo + 1e-12);
        prop_assert!(a <= b + 1e-12);
    }

    #[test]
    fn duration_ordering(q in curve(31), s in screening(57), tau in 0.1..2.0f64) {
        let d = duration_set(&q, &s, tau, Variant::Rita3).unwrap();
        prop_assert!(d.omega_rs >= 0.0);
        prop_assert!(d.omega_rs <= d.omega_r.min(d.omega_s) + 1e-9);
        prop_assert!(d.omega_r <= tau + 1e-12 && d.omega_s <= tau + 1e-12);
    }

    #[test]
    fn durations_shrink_with_tau(q in curve(31), s in screening(57), t1 in 0.1..2.0f64, t2 in 0.1..2.0f64) {
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        let a = duration_set(&q, &s, lo, Variant::Rita3).unwrap();
        let b = duration_set(&q, &s, hi, Variant::Rita3).unwrap();
        prop_assert!(a.omega_s <= b.omega_s + 1e-12);
        prop_assert!(a.omega_rs <= b.omega_rs + 1e-12);
    }

    #[test]
    fn larger_screening_never_lowers_omega(s in screening(41), lift in 0.0..1.0f64) {
        let bigger = s.map(|v| v + lift * (1.0 - v)).unwrap();
        prop_assert!(omega_s(&bigger, 2.0).unwrap() >= omega_s(&s, 2.0).unwrap() - 1e-12);
    }

    #[test]
    fn rita2_dominates_rita3(s in screening(201), delay in 0.0..2.0f64, level in 0.0..1.0f64) {
        let w = TreatmentUptake::new(vec![0.0, delay, delay + 0.5], vec![0.0, level, 1.0]).unwrap();
        let tr = treatment_screening_survival(&s, &w).unwrap();
        for (a, b) in tr.values().iter().zip(s.values()) {
            prop_assert!(a >= b);
        }
        for w in tr.values().windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn empirical_survival_is_monotone(times in prop::collection::vec((0.0..5.0f64, 0.1..3.0f64), 1..60)) {
        let d = empirical_test_survival(&times).unwrap();
        let mut prev = 1.0;
        for i in 0..=100 {
            let v = d.eval(i as f64 * 0.05);
            prop_assert!(v <= prev + 1e-15 && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn consistency_identity((p, reference, d) in consistent_inputs()) {
        prop_assume!(d.omega_rs > reference.beta * d.omega_s * 1.01);
        let lambda = rita_incidence(&p, &reference, &d).unwrap().lambda;
        prop_assume!(lambda.abs() > 1e-6 && lambda * 2.0 * (1.0 - p.p_h) < p.p_h * 0.99);
        let frr = residual_frr(&p, lambda, &reference, &d).unwrap();
        let back = standard_rita_incidence(p.p_rs_given_h, p.p_h, frr, d.omega_rs, d.tau).unwrap().lambda;
        prop_assert!(((back - lambda) / lambda).abs() < 1e-10);
    }

    #[test]
    fn rita_increasing_in_recency((p, reference, d) in consistent_inputs(), bump in 0.001..0.1f64) {
        prop_assume!(d.omega_rs > reference.beta * d.omega_s * 1.01);
        let higher = ProportionSet::new(p.p_h, p.p_s_given_h, (p.p_r_given_s + bump).min(1.0), None, 1e4).unwrap();
        prop_assume!(higher.p_r_given_s > p.p_r_given_s);
        let a = rita_incidence(&p, &reference, &d).unwrap().lambda;
        let b = rita_incidence(&higher, &reference, &d).unwrap().lambda;
        prop_assert!(b > a);
    }

    #[test]
    fn no_screening_reduces_to_naive(p_h in 0.02..0.5f64, p_r in 0.0..0.2f64, beta in 0.0..0.01f64, q in curve(21)) {
        let reference = ReferenceParams::from_curve(&q, beta, 2.0).unwrap();
        prop_assume!(reference.mdri_ref > beta * 2.0 * 1.01);
        let s = ScreeningSurvival::unscreened(2.0, 21).unwrap();
        let d = duration_set(&q, &s, 2.0, Variant::Rita3).unwrap();
        let p = ProportionSet::new(p_h, 1.0, p_r, Some(p_r), 1e4).unwrap();
        let rita = rita_incidence(&p, &reference, &d).unwrap().lambda;
        let naive = naive_incidence(p_r, p_h, &reference).unwrap().lambda;
        prop_assert!((rita - naive).abs() <= 1e-12 * naive.abs().max(1e-300));
    }

    #[test]
    fn se_ignores_order_and_scales(point in -1.0..1.0f64, reps in prop::collection::vec(-1.0..1.0f64, 2..40), c in -5.0..5.0f64) {
        let cfg = JackknifeConfig::Jk1;
        let se = jackknife_se(point, &reps, &cfg).unwrap();
        let mut rev = reps.clone();
        rev.reverse();
        prop_assert!((jackknife_se(point, &rev, &cfg).unwrap() - se).abs() <= 1e-12 * se.max(1.0));
        let scaled: Vec<f64> = reps.iter().map(|r| point + c * (r - point)).collect();
        let se_c = jackknife_se(point, &scaled, &cfg).unwrap();
        prop_assert!((se_c - c.abs() * se).abs() <= 1e-9 * se.max(1e-12));
    }

    #[test]
    fn rita3_screening_implies_rita2(hiv in any::<bool>(), vl in 10.0..1e5f64, arv in any::<bool>(), dx in any::<bool>(), aids in any::<bool>()) {
        let r = Respondent {
            hiv_positive: Some(hiv),
            assay_recent: hiv.then_some(false),
            viral_load: Some(vl),
            arv_detected: Some(arv),
            self_report_diagnosed: Some(dx),
            aids: Some(aids),
            time_since_last_test: None,
            weight: 1.0,
        };
        let cfg = ScreeningConfig::default();
        if screen(&r, Variant::Rita3, &cfg).unwrap() {
            prop_assert!(screen(&r, Variant::Rita2, &cfg).unwrap());
        }
    }

    #[test]
    fn proportions_invariant_to_weight_scale(
        rows in prop::collection::vec((any::<bool>(), any::<bool>(), any::<bool>(), 0.1..5.0f64), 8..60),
        c in 0.01..100.0f64,
    ) {
        let build = |scale: f64| {
            let mut rs: Vec<Respondent> = rows
                .iter()
                .map(|&(hiv, recent, dx, w)| {
                    if hiv {
                        Respondent { self_report_diagnosed: Some(dx), ..Respondent::positive(recent, w * scale) }
                    } else {
                        Respondent::negative(w * scale)
                    }
                })
                .collect();
            // guarantee a screened-in respondent and a negative
            rs.push(Respondent::positive(true, scale));
            rs.push(Respondent::negative(scale));
            SurveyDataset::new(rs, ReplicateWeights::None).unwrap()
        };
        let cfg = ScreeningConfig::default();
        let a = proportions(&build(1.0), WeightSel::Main, Variant::Rita3, &cfg).unwrap();
        let b = proportions(&build(c), WeightSel::Main, Variant::Rita3, &cfg).unwrap();
        prop_assert!((a.p_h - b.p_h).abs() < 1e-12);
        prop_assert!((a.p_r_given_s - b.p_r_given_s).abs() < 1e-12);
        prop_assert!((a.p_s_given_h - b.p_s_given_h).abs() < 1e-12);
        prop_assert!(a.p_r_given_h.unwrap() * a.p_h >= a.p_r_given_s * a.p_s - 1e-12);
    }
}
