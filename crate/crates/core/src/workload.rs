//! Slotted game: per-slot workload laws and expected waits.
//!
//! Slots `0..=T` each last `tau` time units and arrivals happen at slot
//! starts. Under belief `i` the work arriving in slot `t` is compound Poisson
//! with rate `lambda_a p_a[t] + lambda_b p_b[t]` and jumps `x_i`, and the
//! workload seen just before slot `t + 1` is `(V_t + H_t - tau)^+`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dists::{convolve, Pmf, ServiceDist, DEFAULT_TAIL_EPS};
use crate::error::invalid;
use crate::{Belief, Error, Result};

/// Largest admissible `|sum(p) - 1|` for strategies passed to the public
/// profile functions.
pub const SIMPLEX_TOL: f64 = 1e-6;

/// Populations, slot grid and believed service laws.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotGame {
    populations: [f64; 2],
    slot_len: usize,
    last_slot: usize,
    services: [ServiceDist; 2],
    tail_eps: f64,
}

impl SlotGame {
    /// `services[i]` is the law type `i` believes in.
    pub fn new(
        populations: [f64; 2],
        slot_len: usize,
        last_slot: usize,
        services: [ServiceDist; 2],
    ) -> Result<Self> {
        if populations.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(invalid!("populations {populations:?} must be finite and nonnegative"));
        }
        if slot_len == 0 {
            return Err(invalid!("slot length must be at least 1"));
        }
        Ok(Self {
            populations,
            slot_len,
            last_slot,
            services,
            tail_eps: DEFAULT_TAIL_EPS,
        })
    }

    /// Overrides the end-to-end truncation budget of a profile.
    pub fn with_tail_eps(mut self, tail_eps: f64) -> Result<Self> {
        if !(tail_eps > 0.0 && tail_eps < 1e-3) {
            return Err(invalid!("tail tolerance {tail_eps} outside (0, 1e-3)"));
        }
        self.tail_eps = tail_eps;
        Ok(self)
    }

    /// `(lambda_a, lambda_b)`.
    pub fn populations(&self) -> [f64; 2] {
        self.populations
    }

    /// `lambda_i`.
    pub fn population(&self, belief: Belief) -> f64 {
        self.populations[belief.index()]
    }

    /// `tau`.
    pub fn slot_len(&self) -> usize {
        self.slot_len
    }

    /// `T`, the index of the last slot.
    pub fn last_slot(&self) -> usize {
        self.last_slot
    }

    /// `T + 1`.
    pub fn slots(&self) -> usize {
        self.last_slot + 1
    }

    /// Acceptance period length `(T + 1) tau`.
    pub fn horizon(&self) -> usize {
        self.slots() * self.slot_len
    }

    /// Service law believed by type `i`.
    pub fn service(&self, belief: Belief) -> &ServiceDist {
        &self.services[belief.index()]
    }

    /// End-to-end truncation budget.
    pub fn tail_eps(&self) -> f64 {
        self.tail_eps
    }

    /// Budget spent per slot, once on the arrival law and once on trimming.
    fn slot_budget(&self) -> f64 {
        self.tail_eps / (2.0 * self.slots() as f64)
    }

    /// Arrival rate `lambda_a p_a[t] + lambda_b p_b[t]` per slot.
    pub fn arrival_rates(&self, pa: &ArrivalStrategy, pb: &ArrivalStrategy) -> Result<Vec<f64>> {
        self.check_len(pa)?;
        self.check_len(pb)?;
        let [la, lb] = self.populations;
        Ok(pa.probs.iter().zip(&pb.probs).map(|(a, b)| la * a + lb * b).collect())
    }

    pub(crate) fn check_len(&self, p: &ArrivalStrategy) -> Result<()> {
        if p.len() != self.slots() {
            return Err(Error::InvalidStrategy(format!(
                "strategy has {} slots, game has {}",
                p.len(),
                self.slots()
            )));
        }
        Ok(())
    }
}

/// A probability vector over slots `0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalStrategy {
    probs: Vec<f64>,
}

impl ArrivalStrategy {
    /// Any finite nonnegative vector; use [`ArrivalStrategy::check_simplex`]
    /// to test the total.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidStrategy("strategy has no slots".into()));
        }
        if let Some((t, p)) = probs.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidStrategy(format!("p[{t}] = {p}")));
        }
        Ok(Self { probs })
    }

    /// Everything in slot `t` out of `slots`.
    pub fn point(slots: usize, t: usize) -> Result<Self> {
        if t >= slots {
            return Err(Error::InvalidStrategy(format!("slot {t} outside 0..{slots}")));
        }
        let mut probs = vec![0.0; slots];
        probs[t] = 1.0;
        Ok(Self { probs })
    }

    /// Uniform over `slots` slots.
    pub fn uniform(slots: usize) -> Result<Self> {
        Self::new(vec![1.0 / slots as f64; slots])
    }

    /// `p[t]` for every slot.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `p[t]`, zero beyond the last slot.
    pub fn get(&self, t: usize) -> f64 {
        self.probs.get(t).copied().unwrap_or(0.0)
    }

    /// Number of slots.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    /// Always false; strategies have at least one slot.
    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `sum(p)`.
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Fails unless `|sum(p) - 1| <= eps`.
    pub fn check_simplex(&self, eps: f64) -> Result<()> {
        let total = self.total();
        if (total - 1.0).abs() > eps {
            return Err(Error::InvalidStrategy(format!(
                "total mass {total} differs from 1 by more than {eps}"
            )));
        }
        Ok(())
    }

    /// Rescaled to total mass exactly one (up to rounding).
    pub fn normalized(&self) -> Result<Self> {
        let total = self.total();
        if !(total > 0.0) {
            return Err(Error::InvalidStrategy("cannot normalize zero mass".into()));
        }
        Ok(Self {
            probs: self.probs.iter().map(|p| p / total).collect(),
        })
    }

    /// Running sums `F(t) = p[0] + ... + p[t]`.
    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect()
    }

    /// Slots with `p[t] > floor`.
    pub fn support(&self, floor: f64) -> Vec<usize> {
        (0..self.len()).filter(|&t| self.probs[t] > floor).collect()
    }

    /// `max_t |p[t] - q[t]|`, padding the shorter vector with zeros.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        let n = self.len().max(other.len());
        (0..n).map(|t| (self.get(t) - other.get(t)).abs()).fold(0.0, f64::max)
    }

    /// Mean slot index.
    pub fn mean_slot(&self) -> f64 {
        self.probs.iter().enumerate().map(|(t, p)| t as f64 * p).sum::<f64>() / self.total()
    }
}

/// One step of the recursion: the law of `(V + H - tau)^+` for independent
/// `V ~ v` and `H ~ h`.
pub fn step_pmf(v: &Pmf, h: &Pmf, tau: usize) -> Pmf {
    drain(&convolve(v, h), tau)
}

fn drain(y: &Pmf, tau: usize) -> Pmf {
    let m = y.mass();
    let head: f64 = m.iter().take(tau + 1).sum();
    let mut mass = Vec::with_capacity(m.len().saturating_sub(tau).max(1));
    mass.push(head);
    if m.len() > tau + 1 {
        mass.extend_from_slice(&m[tau + 1..]);
    }
    Pmf::with_tail(mass, y.tail_bound())
}

/// `sum_{k < tau} (tau - k) y(k)`, the idle time within a slot.
fn idle_term(y: &Pmf, tau: usize) -> f64 {
    y.mass()
        .iter()
        .take(tau)
        .enumerate()
        .map(|(k, m)| (tau - k) as f64 * m)
        .sum()
}

/// Workload law just before some slot, under one belief.
///
/// Advancing it one slot at a time is how the solver explores candidate
/// strategies without recomputing shared prefixes.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadState {
    belief: Belief,
    slot: usize,
    pmf: Pmf,
    mean: f64,
}

impl WorkloadState {
    /// Empty system before slot 0.
    pub fn new(belief: Belief) -> Self {
        Self {
            belief,
            slot: 0,
            pmf: Pmf::point(0),
            mean: 0.0,
        }
    }

    /// Slot this state precedes.
    pub fn slot(&self) -> usize {
        self.slot
    }

    /// Law of `V_{i,t-}`.
    pub fn pmf(&self) -> &Pmf {
        &self.pmf
    }

    /// `E[V_{i,t-}]` accumulated from the telescoping identity.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Expected wait of a tagged arrival in this slot when the total
    /// arrival rate in the slot is `rate`.
    pub fn wait(&self, game: &SlotGame, rate: f64) -> f64 {
        self.mean + rate * game.service(self.belief).mean() / 2.0
    }

    /// Moves past the current slot, in which work arrives at Poisson rate
    /// `rate`.
    pub fn advance(&mut self, game: &SlotGame, rate: f64) -> Result<()> {
        let tau = game.slot_len;
        let budget = game.slot_budget();
        let service = game.service(self.belief);
        let y = if rate > 0.0 {
            convolve(&self.pmf, &service.compound(rate, budget)?)
        } else {
            self.pmf.clone()
        };
        self.mean += rate * service.mean() - tau as f64 + idle_term(&y, tau);
        self.pmf = drain(&y, tau);
        self.pmf.trim_tail(budget);
        self.slot += 1;
        Ok(())
    }
}

/// Per-slot workload laws, means and expected waits under one belief.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadProfile {
    /// Belief the profile is computed under.
    pub belief: Belief,
    /// Law of `V_{i,t-}` for each slot.
    pub pmfs: Vec<Pmf>,
    /// `E[V_{i,t-}]` from the telescoping identity.
    pub mean_workload: Vec<f64>,
    /// `E[V_{i,t-}]` summed directly from `pmfs`.
    pub mean_workload_direct: Vec<f64>,
    /// Total arrival rate in each slot.
    pub arrival_rates: Vec<f64>,
    /// Expected wait `w_{i,t}` of a tagged arrival in each slot.
    pub waits: Vec<f64>,
}

/// Tolerance for the two mean computations to agree.
fn mean_agreement_tol(pmf: &Pmf, mean: f64) -> f64 {
    10.0 * pmf.max_value().max(1) as f64 * pmf.tail_bound().max(DEFAULT_TAIL_EPS) + 1e-10 * (1.0 + mean)
}

/// Workload profile for arbitrary per-slot arrival rates.
pub fn profile_from_rates(game: &SlotGame, belief: Belief, rates: &[f64]) -> Result<WorkloadProfile> {
    if rates.len() != game.slots() {
        return Err(Error::InvalidStrategy(format!(
            "{} rates for {} slots",
            rates.len(),
            game.slots()
        )));
    }
    let chi = game.service(belief).mean();
    let mut state = WorkloadState::new(belief);
    let n = rates.len();
    let mut out = WorkloadProfile {
        belief,
        pmfs: Vec::with_capacity(n),
        mean_workload: Vec::with_capacity(n),
        mean_workload_direct: Vec::with_capacity(n),
        arrival_rates: rates.to_vec(),
        waits: Vec::with_capacity(n),
    };
    for (t, &rate) in rates.iter().enumerate() {
        let direct = state.pmf.mean();
        let tol = mean_agreement_tol(&state.pmf, state.mean);
        if (direct - state.mean).abs() > tol {
            return Err(Error::NumericFailure(format!(
                "slot {t}: telescoping mean {} vs direct mean {direct} (tolerance {tol})",
                state.mean
            )));
        }
        out.pmfs.push(state.pmf.clone());
        out.mean_workload.push(state.mean);
        out.mean_workload_direct.push(direct);
        out.waits.push(state.mean + rate * chi / 2.0);
        if t + 1 < n {
            state.advance(game, rate)?;
        }
    }
    Ok(out)
}

/// Workload profile under belief `i` for the strategy pair `(p_a, p_b)`.
pub fn workload_profile(
    game: &SlotGame,
    pa: &ArrivalStrategy,
    pb: &ArrivalStrategy,
    belief: Belief,
) -> Result<WorkloadProfile> {
    pa.check_simplex(SIMPLEX_TOL)?;
    pb.check_simplex(SIMPLEX_TOL)?;
    let rates = game.arrival_rates(pa, pb)?;
    profile_from_rates(game, belief, &rates)
}

/// `w_{i,t}`: expected wait of a tagged type-`i` arrival in slot `t`.
pub fn expected_wait(
    game: &SlotGame,
    pa: &ArrivalStrategy,
    pb: &ArrivalStrategy,
    belief: Belief,
    t: usize,
) -> Result<f64> {
    if t >= game.slots() {
        return Err(invalid!("slot {t} outside 0..={}", game.last_slot()));
    }
    pa.check_simplex(SIMPLEX_TOL)?;
    pb.check_simplex(SIMPLEX_TOL)?;
    let rates = game.arrival_rates(pa, pb)?;
    let mut state = WorkloadState::new(belief);
    for &rate in &rates[..t] {
        state.advance(game, rate)?;
    }
    Ok(state.wait(game, rates[t]))
}
