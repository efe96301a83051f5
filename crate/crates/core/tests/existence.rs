//! Iterated best response over random small games: every instance that
//! converges must verify, and the rest must say so.

use bottleneck_core::dists::{make_deterministic, make_geometric, make_geometric_mixture};
use bottleneck_core::solver::{iterated_best_response, SolverConfig};
use bottleneck_core::workload::SlotGame;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn random_instances_converge_or_report() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = SolverConfig::default();
    let mut converged = 0;
    for k in 0..50 {
        let la = rng.random_range(0.5..5.0);
        let lb = rng.random_range(0.5..5.0);
        let last = rng.random_range(1..=10usize);
        let tau = rng.random_range(1..=3usize);
        let chi_b = rng.random_range(2..=3u32) as f64;
        let chi_a = chi_b + rng.random_range(1..=3u32) as f64;
        let services = match rng.random_range(0..3) {
            0 => [make_deterministic(chi_a).unwrap(), make_deterministic(chi_b).unwrap()],
            1 => [make_geometric(chi_a).unwrap(), make_geometric(chi_b).unwrap()],
            _ => [
                make_geometric_mixture(chi_a, 1.5).unwrap(),
                make_geometric_mixture(chi_b, 1.3).unwrap(),
            ],
        };
        let game = SlotGame::new([la, lb], tau, last, services).unwrap();
        let eq = iterated_best_response(&game, &cfg).unwrap();
        let r = &eq.report;
        assert_eq!(eq.steps.len(), r.iterations);
        if r.converged {
            converged += 1;
            assert!(r.passed(), "instance {k} converged but fails verification: {r:?}");
        } else {
            assert_eq!(r.iterations, cfg.max_outer);
            assert!(r.last_step >= cfg.step_tol);
            println!(
                "instance {k}: lambda=({la:.3}, {lb:.3}) tau={tau} T={last} chi=({chi_a}, {chi_b}) \
                 not converged after {} rounds, last step {:.2e}",
                r.iterations, r.last_step
            );
        }
    }
    println!("{converged}/50 converged");
    assert!(converged >= 45, "only {converged}/50 converged");
}
