use artkit::stats::one_way_f;
use artkit::{derive_stream, SeedPlan};
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

#[test]
fn null_f_statistic_follows_f_distribution() {
    let (k, n, reps) = (4, 120, 4000);
    let mut rng = derive_stream(SeedPlan::new(31));
    let mut stats: Vec<f64> = (0..reps)
        .map(|_| {
            let groups: Vec<usize> = (0..n).map(|i| i % k).collect();
            let y: Vec<f64> = (0..n).map(|_| -> f64 { StandardNormal.sample(&mut rng) }).collect();
            one_way_f(&groups, &y, k).unwrap()
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let law = FisherSnedecor::new((k - 1) as f64, (n - k) as f64).unwrap();
    let d = stats
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let c = law.cdf(s);
            (c - i as f64 / reps as f64).abs().max(((i + 1) as f64 / reps as f64 - c).abs())
        })
        .fold(0.0, f64::max);
    let critical = 1.95 / (reps as f64).sqrt();
    assert!(d < critical, "KS distance {d} >= {critical}");
}
