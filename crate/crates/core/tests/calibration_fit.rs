use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rita_core::{fit_recency_curve, mdri, CalibrationRecord, Error, FitConfig};

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn draw(n: usize, seed: u64, q: impl Fn(f64) -> f64) -> Vec<CalibrationRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let t = 2.0 * uniform(&mut rng);
            CalibrationRecord::new(t, uniform(&mut rng) < q(t))
        })
        .collect()
}

#[test]
fn recovers_exponential_curve() {
    let q = |t: f64| (-6.0 * t).exp();
    let curve = fit_recency_curve(&draw(5000, 17, q), &FitConfig::default()).unwrap();
    let worst = (0..=1400)
        .map(|i| 0.1 + i as f64 * 1e-3)
        .map(|t| (curve.eval(t) - q(t)).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.05, "max error {worst}");
}

#[test]
fn step_curve_mdri() {
    let records = draw(10_000, 23, |t| if t < 0.35 { 1.0 } else { 0.0 });
    let curve = fit_recency_curve(&records, &FitConfig::default()).unwrap();
    let omega = mdri(&curve, 2.0).unwrap().years;
    assert!((omega - 0.35).abs() < 0.03, "mdri {omega}");
}

#[test]
fn fit_ignores_record_order() {
    let mut records = draw(800, 5, |t: f64| (-3.0 * t).exp());
    let a = fit_recency_curve(&records, &FitConfig::default()).unwrap();
    records.reverse();
    records.swap(3, 400);
    let b = fit_recency_curve(&records, &FitConfig::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn all_recent_is_separation() {
    let records = [CalibrationRecord::new(0.1, true), CalibrationRecord::new(0.2, true)];
    assert!(matches!(fit_recency_curve(&records, &FitConfig::default()), Err(Error::Separation)));
}

#[test]
fn weights_act_as_replication() {
    let base = draw(600, 9, |t: f64| (-2.0 * t).exp());
    let doubled: Vec<_> = base.iter().flat_map(|r| [*r, *r]).collect();
    let weighted: Vec<_> = base
        .iter()
        .map(|r| CalibrationRecord::weighted(r.time_since_seroconversion, r.assay_recent, 2.0))
        .collect();
    let a = fit_recency_curve(&doubled, &FitConfig::default()).unwrap();
    let b = fit_recency_curve(&weighted, &FitConfig::default()).unwrap();
    for t in [0.0, 0.5, 1.0, 1.9] {
        assert!((a.eval(t) - b.eval(t)).abs() < 1e-6);
    }
}
