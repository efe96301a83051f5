//! Learning agents who pick arrival slots from their own experience.
//!
//! A pool of `N` customers is replayed day after day. Each one joins with
//! probability `lambda / N`, receives a noisy signal of the server mode, and
//! either explores a uniform slot or exploits the slot with the lowest running
//! average wait it has seen under that signal. Exploitation becomes likelier
//! with experience through [`theta`].
//!
//! [`coupling`] holds the separate pathwise dominance experiment.

pub mod coupling;

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dists::{PmfSampler, ServiceDist};
use crate::error::invalid;
use crate::{Belief, Result};

/// Default `c1` of the exploitation sigmoid.
pub const DEFAULT_C1: f64 = 1.0;
/// Default `c2` of the exploitation sigmoid; `theta` passes 0.9 near 600
/// visits.
pub const DEFAULT_C2: f64 = 0.005;

/// Probability of exploiting after `x` earlier arrivals under a signal,
/// `exp(c1 / (1 - exp(c2 x)))`, with `theta(0) = 0`.
pub fn theta(x: u64, c1: f64, c2: f64) -> f64 {
    if x == 0 {
        return 0.0;
    }
    libm::exp(-c1 / libm::expm1(c2 * x as f64))
}

/// Settings of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct AbmConfig {
    /// Pool size `N`.
    pub pool: usize,
    /// Mean daily arrivals `lambda`; each customer joins with `lambda / N`.
    pub population: f64,
    /// Number of simulated days.
    pub days: usize,
    /// Probability `p` of the slow mode.
    pub slow_prob: f64,
    /// Probability `q` that a signal is correct.
    pub accuracy: f64,
    /// Service laws in the slow and fast mode.
    pub services: [ServiceDist; 2],
    /// Slot length `tau`.
    pub slot_len: usize,
    /// Index `T` of the last slot.
    pub last_slot: usize,
    /// Sigmoid parameter `c1`.
    pub c1: f64,
    /// Sigmoid parameter `c2`.
    pub c2: f64,
    /// Seed of the ChaCha8 stream.
    pub seed: u64,
    /// Number of day blocks in the exploration diagnostic.
    pub blocks: usize,
}

impl AbmConfig {
    /// Config with the default sigmoid and ten diagnostic blocks.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        pool: usize,
        population: f64,
        days: usize,
        slow_prob: f64,
        accuracy: f64,
        services: [ServiceDist; 2],
        slot_len: usize,
        last_slot: usize,
        seed: u64,
    ) -> Result<Self> {
        let cfg = Self {
            pool,
            population,
            days,
            slow_prob,
            accuracy,
            services,
            slot_len,
            last_slot,
            c1: DEFAULT_C1,
            c2: DEFAULT_C2,
            seed,
            blocks: 10,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Number of slots `T + 1`.
    pub fn slots(&self) -> usize {
        self.last_slot + 1
    }

    /// Daily join probability `lambda / N`.
    pub fn join_prob(&self) -> f64 {
        self.population / self.pool as f64
    }

    /// Checks the parameter ranges.
    pub fn validate(&self) -> Result<()> {
        if self.pool == 0 {
            return Err(invalid!("pool size must be at least 1"));
        }
        if !(self.population >= 0.0 && self.population <= self.pool as f64) {
            return Err(invalid!(
                "mean arrivals {} must lie in [0, {}]",
                self.population,
                self.pool
            ));
        }
        if !(0.0..=1.0).contains(&self.slow_prob) {
            return Err(invalid!("slow-mode probability {} outside [0, 1]", self.slow_prob));
        }
        if !(self.accuracy > 0.5 && self.accuracy <= 1.0) {
            return Err(invalid!("signal accuracy {} outside (1/2, 1]", self.accuracy));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0) || !self.c1.is_finite() || !self.c2.is_finite() {
            return Err(invalid!("sigmoid parameters must be positive, got ({}, {})", self.c1, self.c2));
        }
        if self.slot_len == 0 {
            return Err(invalid!("slot length must be at least 1"));
        }
        if self.blocks == 0 {
            return Err(invalid!("need at least one diagnostic block"));
        }
        Ok(())
    }
}

/// Memory of one customer.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    /// Running average wait per signal and slot; zero until visited.
    pub wbar: [Vec<f64>; 2],
    /// Visits per signal and slot.
    pub visits: [Vec<u64>; 2],
    /// Arrivals per signal.
    pub arrivals: [u64; 2],
}

impl AgentState {
    /// Fresh customer over `slots` slots.
    pub fn new(slots: usize) -> Self {
        Self {
            wbar: [vec![0.0; slots], vec![0.0; slots]],
            visits: [vec![0; slots], vec![0; slots]],
            arrivals: [0; 2],
        }
    }

    /// Adds one experienced wait.
    pub fn record(&mut self, signal: Belief, slot: usize, wait: f64) {
        let i = signal.index();
        self.visits[i][slot] += 1;
        self.arrivals[i] += 1;
        let n = self.visits[i][slot] as f64;
        self.wbar[i][slot] += (wait - self.wbar[i][slot]) / n;
    }

    /// Empirical slot frequencies under a signal, or `None` before the first
    /// arrival with it.
    pub fn frequencies(&self, signal: Belief) -> Option<Vec<f64>> {
        let i = signal.index();
        let n = self.arrivals[i];
        (n > 0).then(|| self.visits[i].iter().map(|&v| v as f64 / n as f64).collect())
    }
}

/// Picks a slot for a customer holding `signal`. Returns the slot and whether
/// it came from uniform exploration.
pub fn choose_slot<R: Rng + ?Sized>(agent: &AgentState, signal: Belief, c1: f64, c2: f64, rng: &mut R) -> (usize, bool) {
    let i = signal.index();
    let slots = agent.wbar[i].len();
    let exploit = rng.random::<f64>() < theta(agent.arrivals[i], c1, c2);
    if !exploit {
        return (rng.random_range(0..slots), true);
    }
    let row = &agent.wbar[i];
    let best = row.iter().copied().fold(f64::INFINITY, f64::min);
    let ties = row.iter().filter(|&&w| w == best).count();
    let pick = rng.random_range(0..ties);
    let slot = row
        .iter()
        .enumerate()
        .filter(|(_, &w)| w == best)
        .nth(pick)
        .map(|(t, _)| t)
        .unwrap_or(0);
    (slot, false)
}

/// Waits of one day's arrivals, in input order. Each arrival is `(id, slot)`;
/// ids are carried through untouched. Same-slot arrivals are served in random
/// order, and `slot_len` units of work drain between slots.
pub fn simulate_day<R: Rng + ?Sized>(
    arrivals: &[(usize, usize)],
    service: &PmfSampler,
    slot_len: usize,
    slots: usize,
    rng: &mut R,
) -> Vec<f64> {
    let mut by_slot: Vec<Vec<usize>> = vec![Vec::new(); slots];
    for (idx, &(_, slot)) in arrivals.iter().enumerate() {
        by_slot[slot].push(idx);
    }
    let mut waits = vec![0.0; arrivals.len()];
    let mut work: u64 = 0;
    for cohort in &mut by_slot {
        cohort.shuffle(rng);
        for &idx in cohort.iter() {
            waits[idx] = work as f64;
            work += service.sample(rng) as u64;
        }
        work = work.saturating_sub(slot_len as u64);
    }
    waits
}

/// Averages of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct AbmResult {
    /// Per-signal slot distribution averaged over customers who received
    /// that signal at least once.
    pub pbar: [Vec<f64>; 2],
    /// Per-signal average of each customer's mean wait.
    pub wbar_pop: [f64; 2],
    /// Per-signal, per-slot wait weighted by how often customers chose the
    /// slot; `wbar_pop[i] = sum_t pbar[i][t] * slot_waits[i][t]`.
    pub slot_waits: [Vec<f64>; 2],
    /// Customers contributing to each signal's averages.
    pub agents_counted: [usize; 2],
    /// Fraction of decisions that explored, per block of days.
    pub exploration: Vec<f64>,
    /// Mean daily number of joiners.
    pub mean_joiners: f64,
    /// Days in which the server was slow.
    pub slow_days: usize,
}

/// Runs the learning simulation.
pub fn run_abm(cfg: &AbmConfig) -> Result<AbmResult> {
    cfg.validate()?;
    let slots = cfg.slots();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samplers = [cfg.services[0].sampler(), cfg.services[1].sampler()];
    let join = cfg.join_prob();
    let mut agents = vec![AgentState::new(slots); cfg.pool];

    let blocks = cfg.blocks.min(cfg.days.max(1));
    let mut explored = vec![0u64; blocks];
    let mut decisions = vec![0u64; blocks];
    let mut joiners: u64 = 0;
    let mut slow_days = 0;
    let mut today: Vec<(usize, usize)> = Vec::new();
    let mut signals: Vec<Belief> = Vec::new();

    for day in 0..cfg.days {
        let block = day * blocks / cfg.days;
        let mode = if rng.random::<f64>() < cfg.slow_prob {
            slow_days += 1;
            Belief::A
        } else {
            Belief::B
        };
        today.clear();
        signals.clear();
        for (k, agent) in agents.iter().enumerate() {
            if rng.random::<f64>() >= join {
                continue;
            }
            let correct = rng.random::<f64>() < cfg.accuracy;
            let signal = if correct { mode } else { mode.other() };
            let (slot, explore) = choose_slot(agent, signal, cfg.c1, cfg.c2, &mut rng);
            explored[block] += explore as u64;
            decisions[block] += 1;
            today.push((k, slot));
            signals.push(signal);
        }
        joiners += today.len() as u64;
        let waits = simulate_day(&today, &samplers[mode.index()], cfg.slot_len, slots, &mut rng);
        for ((&(k, slot), &signal), &w) in today.iter().zip(&signals).zip(&waits) {
            agents[k].record(signal, slot, w);
        }
    }

    let mut pbar = [vec![0.0; slots], vec![0.0; slots]];
    let mut weighted = [vec![0.0; slots], vec![0.0; slots]];
    let mut wbar_pop = [0.0; 2];
    let mut counted = [0usize; 2];
    for agent in &agents {
        for signal in Belief::BOTH {
            let i = signal.index();
            let Some(freq) = agent.frequencies(signal) else {
                continue;
            };
            counted[i] += 1;
            for t in 0..slots {
                pbar[i][t] += freq[t];
                weighted[i][t] += freq[t] * agent.wbar[i][t];
            }
        }
    }
    let mut slot_waits = [vec![0.0; slots], vec![0.0; slots]];
    for i in 0..2 {
        if counted[i] == 0 {
            continue;
        }
        for t in 0..slots {
            if pbar[i][t] > 0.0 {
                slot_waits[i][t] = weighted[i][t] / pbar[i][t];
            }
        }
        let n = counted[i] as f64;
        pbar[i].iter_mut().for_each(|p| *p /= n);
        wbar_pop[i] = weighted[i].iter().sum::<f64>() / n;
    }
    let exploration = explored
        .iter()
        .zip(&decisions)
        .map(|(&e, &d)| if d == 0 { 0.0 } else { e as f64 / d as f64 })
        .collect();
    Ok(AbmResult {
        pbar,
        wbar_pop,
        slot_waits,
        agents_counted: counted,
        exploration,
        mean_joiners: if cfg.days == 0 { 0.0 } else { joiners as f64 / cfg.days as f64 },
        slow_days,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dists::{make_deterministic, make_geometric};
    use crate::workload::{workload_profile, ArrivalStrategy, SlotGame};
    use rand_distr::{Distribution, Poisson};
    use std::vec::Vec;

    fn det(chi: f64) -> ServiceDist {
        make_deterministic(chi).unwrap()
    }

    #[test]
    fn theta_values() {
        assert_eq!(theta(0, 1.0, 0.01), 0.0);
        // exp(1 / (1 - e)), checked with 30-digit arithmetic.
        assert!((theta(100, 1.0, 0.01) - 0.558_792_704_762_746_9).abs() < 1e-12);
        assert!(theta(1_000_000, 1.0, 0.01) > 1.0 - 1e-12);
        let mut last = 0.0;
        for x in 0..5000 {
            let th = theta(x, DEFAULT_C1, DEFAULT_C2);
            assert!((0.0..1.0).contains(&th) && th >= last);
            last = th;
        }
        assert!(theta(600, DEFAULT_C1, DEFAULT_C2) > 0.9 && theta(400, DEFAULT_C1, DEFAULT_C2) < 0.9);
    }

    #[test]
    fn fresh_agent_explores_uniformly() {
        let agent = AgentState::new(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0u32; 4];
        for _ in 0..40_000 {
            let (t, explored) = choose_slot(&agent, Belief::A, 1.0, 0.01, &mut rng);
            assert!(explored);
            counts[t] += 1;
        }
        for c in counts {
            assert!((c as f64 - 10_000.0).abs() < 4.0 * 86.7, "{counts:?}");
        }
    }

    #[test]
    fn experienced_agent_exploits_its_best_slot() {
        let mut agent = AgentState::new(5);
        for t in 0..5 {
            agent.record(Belief::B, t, if t == 3 { 1.0 } else { 7.0 });
        }
        agent.arrivals[1] = 1_000_000;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let hits = (0..10_000)
            .filter(|_| choose_slot(&agent, Belief::B, 1.0, 0.01, &mut rng).0 == 3)
            .count();
        assert!(hits as f64 >= 10_000.0 * theta(1_000_000, 1.0, 0.01) - 1.0);
    }

    #[test]
    fn ties_are_broken_uniformly() {
        let mut agent = AgentState::new(6);
        agent.arrivals[0] = u64::MAX / 2;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let mut counts = [0u32; 6];
        for _ in 0..n {
            counts[choose_slot(&agent, Belief::A, 1.0, 0.01, &mut rng).0] += 1;
        }
        let (p, mean) = (1.0 / 6.0, n as f64 / 6.0);
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn running_average_is_exact() {
        let mut agent = AgentState::new(2);
        for w in [3.0, 5.0, 10.0] {
            agent.record(Belief::A, 1, w);
        }
        assert_eq!(agent.wbar[0][1], 6.0);
        assert_eq!(agent.visits[0], vec![0, 3]);
        assert_eq!(agent.arrivals, [3, 0]);
        assert_eq!(agent.frequencies(Belief::A).unwrap(), vec![0.0, 1.0]);
        assert!(agent.frequencies(Belief::B).is_none());
    }

    #[test]
    fn lone_arrival_does_not_wait() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = det(3.0).sampler();
        assert_eq!(simulate_day(&[(0, 2)], &s, 1, 4, &mut rng), vec![0.0]);
    }

    #[test]
    fn same_slot_pair_is_served_in_random_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = det(2.0).sampler();
        let mut first = 0;
        for _ in 0..2000 {
            let w = simulate_day(&[(0, 0), (1, 0)], &s, 1, 1, &mut rng);
            let mut sorted = w.clone();
            sorted.sort_by(f64::total_cmp);
            assert_eq!(sorted, vec![0.0, 2.0]);
            first += (w[0] == 0.0) as u32;
        }
        assert!((first as f64 - 1000.0).abs() < 4.0 * 22.4);
    }

    #[test]
    fn cohort_waits_are_cumulative_service() {
        // Deterministic jobs of 3 with two units drained per slot.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = det(3.0).sampler();
        let arrivals = [(0, 0), (1, 0), (2, 0), (3, 1), (4, 3)];
        let w = simulate_day(&arrivals, &s, 2, 4, &mut rng);
        let mut cohort: Vec<f64> = w[..3].to_vec();
        cohort.sort_by(f64::total_cmp);
        assert_eq!(cohort, vec![0.0, 3.0, 6.0]);
        assert_eq!(w[3], 7.0);
        assert_eq!(w[4], 6.0);
    }

    #[test]
    fn day_means_match_the_workload_recursion() {
        let services = [make_geometric(2.0).unwrap(), det(1.0)];
        let g = SlotGame::new([3.0, 0.0], 2, 4, services.clone()).unwrap();
        let pa = ArrivalStrategy::new(vec![0.4, 0.1, 0.2, 0.2, 0.1]).unwrap();
        let none = ArrivalStrategy::point(5, 0).unwrap();
        let want = workload_profile(&g, &pa, &none, Belief::A).unwrap().waits;

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sampler = services[0].sampler();
        let count = Poisson::new(3.0).unwrap();
        let slot_of = PmfSampler::new(&crate::dists::Pmf::new(pa.probs().to_vec(), 0.0).unwrap());
        let mut total = [0.0; 5];
        let mut seen = [0u64; 5];
        let mut arrivals = Vec::new();
        for _ in 0..100_000 {
            let n = count.sample(&mut rng) as usize;
            arrivals.clear();
            arrivals.extend((0..n).map(|k| (k, slot_of.sample(&mut rng))));
            let w = simulate_day(&arrivals, &sampler, 2, 5, &mut rng);
            for (&(_, t), w) in arrivals.iter().zip(w) {
                total[t] += w;
                seen[t] += 1;
            }
        }
        for t in 0..5 {
            let got = total[t] / seen[t] as f64;
            assert!((got - want[t]).abs() < 1e-2 * want[t].max(1.0) + 2e-2, "slot {t}: {got} vs {}", want[t]);
        }
    }

    fn small(q: f64, services: [ServiceDist; 2], days: usize, seed: u64) -> AbmConfig {
        AbmConfig::new(20, 4.0, days, 0.5, q, services, 2, 5, seed).unwrap()
    }

    #[test]
    fn rows_are_distributions_and_waits_add_up() {
        let r = run_abm(&small(0.8, [det(3.0), det(1.0)], 3000, 8)).unwrap();
        for i in 0..2 {
            assert!((r.pbar[i].iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let sum: f64 = r.pbar[i].iter().zip(&r.slot_waits[i]).map(|(p, w)| p * w).sum();
            assert!((sum - r.wbar_pop[i]).abs() < 1e-9 * r.wbar_pop[i].max(1.0));
            assert_eq!(r.agents_counted[i], 20);
        }
    }

    #[test]
    fn daily_joiners_average_lambda() {
        let cfg = small(0.8, [det(3.0), det(1.0)], 5000, 9);
        let r = run_abm(&cfg).unwrap();
        let sd = (cfg.population * (1.0 - cfg.join_prob()) / cfg.days as f64).sqrt();
        assert!((r.mean_joiners - cfg.population).abs() < 3.0 * sd, "{}", r.mean_joiners);
    }

    #[test]
    fn exploration_decays() {
        let r = run_abm(&small(0.9, [det(3.0), det(1.0)], 8000, 10)).unwrap();
        assert!(r.exploration[0] > r.exploration[r.exploration.len() - 1]);
        for pair in r.exploration.windows(2) {
            assert!(pair[1] <= pair[0] + 0.01, "{:?}", r.exploration);
        }
    }

    #[test]
    fn uninformative_environment_gives_equal_rows() {
        let services = [det(2.0), det(2.0)];
        let r = run_abm(&small(1.0, services, 20_000, 11)).unwrap();
        let gap = r.pbar[0].iter().zip(&r.pbar[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap < 0.05, "{:?}", r.pbar);
    }

    #[test]
    fn same_seed_same_result() {
        let cfg = small(0.9, [make_geometric(3.0).unwrap(), det(1.0)], 500, 12);
        assert_eq!(run_abm(&cfg).unwrap(), run_abm(&cfg).unwrap());
        let other = AbmConfig { seed: 13, ..cfg.clone() };
        assert_ne!(run_abm(&cfg).unwrap(), run_abm(&other).unwrap());
    }

    #[test]
    fn config_validation() {
        let s = [det(2.0), det(1.0)];
        assert!(AbmConfig::new(0, 0.0, 1, 0.5, 0.9, s.clone(), 1, 1, 0).is_err());
        assert!(AbmConfig::new(5, 6.0, 1, 0.5, 0.9, s.clone(), 1, 1, 0).is_err());
        assert!(AbmConfig::new(5, 1.0, 1, 0.5, 0.5, s.clone(), 1, 1, 0).is_err());
        let mut cfg = AbmConfig::new(5, 1.0, 1, 0.5, 0.9, s, 1, 1, 0).unwrap();
        cfg.c2 = 0.0;
        assert!(run_abm(&cfg).is_err());
    }
}
