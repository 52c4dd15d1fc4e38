//! Structured arm-fluctuation sampler against a Cholesky route.

use artkit::asymptotics::{gaussian_spec, max_of, ArmFluctuation, SquareMatrix};
use artkit::{derive_stream, normalize, SeedPlan};
use rand_distr::{Distribution, StandardNormal};

fn cholesky(a: &SquareMatrix) -> Vec<Vec<f64>> {
    let m = a.dim();
    let mut l = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][i] = (a.get(i, i) - s).sqrt();
            } else {
                l[i][j] = (a.get(i, j) - s) / l[j][j];
            }
        }
    }
    l
}

fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn both_routes_agree() {
    let q = normalize(&[0.3, 0.1, 0.25, 0.2, 0.15]).unwrap();
    let p = q.len();
    let spec = gaussian_spec(&q).unwrap();
    let chol = cholesky(&spec.sigma);
    let sampler = ArmFluctuation::new(q.probs());
    let draws = 100_000;
    let mut rng = derive_stream(SeedPlan::new(8));
    let mut h = vec![0.0; p];
    let mut cov = vec![vec![0.0; p]; p];
    let mut max_structured = Vec::with_capacity(draws);
    let mut max_cholesky = Vec::with_capacity(draws);
    for _ in 0..draws {
        sampler.draw(&mut rng, &mut h);
        let weighted: f64 = h.iter().zip(q.probs()).map(|(a, b)| a * b).sum();
        assert!(weighted.abs() < 1e-10);
        for i in 0..p {
            for j in 0..p {
                cov[i][j] += h[i] * h[j] / draws as f64;
            }
        }
        max_structured.push(max_of(&h));

        let xi: Vec<f64> = (0..p - 1).map(|_| -> f64 { StandardNormal.sample(&mut rng) }).collect();
        let mut g: Vec<f64> = (0..p - 1).map(|i| (0..=i).map(|k| chol[i][k] * xi[k]).sum()).collect();
        let last = -g.iter().zip(q.probs()).map(|(a, b)| a * b).sum::<f64>() / q.get(p - 1);
        g.push(last);
        max_cholesky.push(max_of(&g));
    }
    for i in 0..p - 1 {
        for j in 0..p - 1 {
            let target = spec.sigma.get(i, j);
            let tol = 0.03 * (spec.sigma.get(i, i) * spec.sigma.get(j, j)).sqrt();
            assert!((cov[i][j] - target).abs() < tol, "cov[{i}][{j}] = {} vs {target}", cov[i][j]);
        }
    }
    let d = ks_two_sample(max_structured, max_cholesky);
    let critical = 1.95 * (2.0 / draws as f64).sqrt();
    assert!(d < critical, "KS distance {d} >= {critical}");
}

#[test]
fn uniform_kernel_closed_form() {
    for p in [3, 5, 15, 50] {
        let spec = gaussian_spec(&normalize(&vec![1.0; p]).unwrap()).unwrap();
        for i in 0..p - 1 {
            for j in 0..p - 1 {
                let want = if i == j { (p - 1) as f64 } else { -1.0 };
                assert!((spec.sigma.get(i, j) - want).abs() < 1e-12);
            }
        }
    }
}
