//! Recursions checked against brute force and simulation.

use bottleneck_core::dists::{
    compound_poisson, make_deterministic, make_geometric, make_geometric_mixture, Pmf, ServiceDist,
};
use bottleneck_core::workload::{workload_profile, ArrivalStrategy, SlotGame};
use bottleneck_core::Belief;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

fn naive_convolve(f: &[f64], g: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; f.len() + g.len() - 1];
    for (i, a) in f.iter().enumerate() {
        for (j, b) in g.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// `sum_n P(N = n) f^{*n}` until the Poisson tail is below 1e-18.
fn poisson_mixture(rate: f64, jumps: &[f64]) -> Vec<f64> {
    let mut out = vec![(-rate).exp()];
    let mut power = vec![1.0];
    let mut weight = (-rate).exp();
    let mut covered = weight;
    let mut n = 0u32;
    while 1.0 - covered > 1e-18 && n < 200 {
        n += 1;
        weight *= rate / n as f64;
        covered += weight;
        power = naive_convolve(&power, jumps);
        if out.len() < power.len() {
            out.resize(power.len(), 0.0);
        }
        for (o, p) in out.iter_mut().zip(&power) {
            *o += weight * p;
        }
    }
    out
}

fn random_service(rng: &mut ChaCha8Rng) -> ServiceDist {
    let chi = rng.random_range(2..=4u32) as f64;
    match rng.random_range(0..3) {
        0 => make_deterministic(chi).unwrap(),
        1 => make_geometric(chi).unwrap(),
        _ => make_geometric_mixture(chi, rng.random_range(1.2..2.0)).unwrap(),
    }
}

#[test]
fn compound_poisson_matches_mixture_of_convolutions() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..20 {
        let rate = rng.random_range(0.05..5.0);
        let jumps: Vec<f64> = if case % 4 == 3 {
            // Arbitrary law on 1..=5.
            let raw: Vec<f64> = (0..6).map(|k| if k == 0 { 0.0 } else { rng.random::<f64>() }).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|x| x / s).collect()
        } else {
            random_service(&mut rng).pmf().mass().to_vec()
        };
        let pmf = Pmf::new(jumps.clone(), 0.0).unwrap();
        let panjer = compound_poisson(rate, &pmf, 1e-15).unwrap();
        let oracle = poisson_mixture(rate, &jumps);
        let n = panjer.mass().len().max(oracle.len());
        let diff = (0..n)
            .map(|k| (panjer.get(k) - oracle.get(k).copied().unwrap_or(0.0)).abs())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-10, "case {case}: rate {rate}, sup difference {diff:e}");
    }
}

fn sample_pmf(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

#[test]
fn workload_means_match_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let services = [make_geometric(4.0).unwrap(), make_deterministic(2.0).unwrap()];
    let game = SlotGame::new([5.0, 5.0], 3, 19, services).unwrap();
    let raw_a: Vec<f64> = (0..20).map(|_| rng.random::<f64>()).collect();
    let raw_b: Vec<f64> = (0..20).map(|_| rng.random::<f64>().powi(3)).collect();
    let norm = |v: &[f64]| {
        let s: f64 = v.iter().sum();
        ArrivalStrategy::new(v.iter().map(|x| x / s).collect()).unwrap()
    };
    let (pa, pb) = (norm(&raw_a), norm(&raw_b));
    let reps = 200_000;
    for belief in [Belief::A, Belief::B] {
        let profile = workload_profile(&game, &pa, &pb, belief).unwrap();
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        for &m in game.service(belief).pmf().mass() {
            acc += m;
            cdf.push(acc);
        }
        let rates = game.arrival_rates(&pa, &pb).unwrap();
        let counts: Vec<Poisson<f64>> = rates.iter().map(|&r| Poisson::new(r).unwrap()).collect();
        let (mut sum, mut sq) = (vec![0.0; 20], vec![0.0; 20]);
        for _ in 0..reps {
            let mut v = 0i64;
            for t in 0..20 {
                sum[t] += v as f64;
                sq[t] += (v * v) as f64;
                let n = counts[t].sample(&mut rng) as usize;
                let h: usize = (0..n).map(|_| sample_pmf(&cdf, &mut rng)).sum();
                v = (v + h as i64 - 3).max(0);
            }
        }
        for t in 0..20 {
            let mean = sum[t] / reps as f64;
            let se = ((sq[t] / reps as f64 - mean * mean) / reps as f64).sqrt();
            let exact = profile.mean_workload[t];
            assert!(
                (mean - exact).abs() <= 3.0 * se + 1e-12,
                "{belief} slot {t}: simulated {mean} +- {se}, recursion {exact}"
            );
        }
    }
}
