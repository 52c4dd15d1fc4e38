use artkit::asymptotics::{oracle_q_star, oracle_weights, power_adaptive, power_iid, AdaptiveSpec};
use artkit::{normalize, SeedPlan};

fn uniform(p: usize) -> artkit::Weights {
    normalize(&vec![1.0; p]).unwrap()
}

#[test]
fn iid_power_is_nondecreasing_in_signal() {
    // Every h0 reuses the same draws, so the ordering is exact.
    let q = uniform(6);
    let plan = SeedPlan::new(12);
    let powers: Vec<f64> = [0.0, 1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|&h| power_iid(&q, h, 0.05, 4000, plan).unwrap().power)
        .collect();
    assert!(powers.windows(2).all(|w| w[1] >= w[0]), "{powers:?}");
    assert!(powers[4] > 0.5, "{powers:?}");
}

#[test]
fn null_calibration_small() {
    for alpha in [0.05, 0.1] {
        let iid = power_iid(&uniform(5), 0.0, alpha, 20_000, SeedPlan::new(3)).unwrap();
        assert!((iid.power - alpha).abs() < 3.0 * iid.se + 1e-3, "{iid:?}");
        let mut spec = AdaptiveSpec::uniform(5, 0.5, 0.3, 0.0, alpha);
        spec.n_outer = 3000;
        spec.n_inner = 400;
        let ad = power_adaptive(&spec, SeedPlan::new(4)).unwrap();
        assert!((ad.power - alpha).abs() < 3.0 * ad.se + 0.01, "{ad:?}");
    }
}

#[test]
fn t_zero_reduces_to_uniform_iid() {
    let p = 6;
    let h0 = 4.0;
    let iid = power_iid(&uniform(p), h0, 0.05, 20_000, SeedPlan::new(5)).unwrap();
    let mut spec = AdaptiveSpec::uniform(p, 0.5, 0.0, h0, 0.05);
    spec.n_outer = 3000;
    spec.n_inner = 400;
    let ad = power_adaptive(&spec, SeedPlan::new(6)).unwrap();
    let se = (iid.se.powi(2) + ad.se.powi(2)).sqrt();
    assert!((iid.power - ad.power).abs() < 3.0 * se + 0.01, "{iid:?} vs {ad:?}");
}

#[test]
fn oracle_beats_uniform_at_strong_signal() {
    let p = 8;
    let h0 = 8.0;
    let plan = SeedPlan::new(9);
    let oracle = oracle_q_star(p, h0, 0.05, 11, 4000, plan).unwrap();
    let flat = power_iid(&oracle_weights(p, 1.0 / p as f64).unwrap(), h0, 0.05, 4000, plan).unwrap();
    assert!(oracle.power_star >= flat.power - 1e-12, "{oracle:?} vs {flat:?}");
    assert!(oracle.q1_star >= 1.0 / p as f64 - 1e-12, "{oracle:?}");
    assert_eq!(oracle.curve.len(), 12);
    assert!(oracle.curve.windows(2).all(|w| w[0].0 < w[1].0));
}

#[test]
fn invalid_inputs_rejected() {
    assert!(power_iid(&uniform(4), -1.0, 0.05, 100, SeedPlan::new(0)).is_err());
    assert!(power_iid(&uniform(4), 1.0, 1.5, 100, SeedPlan::new(0)).is_err());
    let mut spec = AdaptiveSpec::uniform(4, 0.5, 0.1, 1.0, 0.05);
    spec.epsilon = 1.0;
    assert!(power_adaptive(&spec, SeedPlan::new(0)).is_err());
}
