//! Pathwise comparison of the two virtual-workload processes.
//!
//! Both queues see the same arrival instants. Job `k` has size
//! `-ln(U_k) / mu_i` in queue `i`, so with a shared `U_k` every job is longer
//! in the slow queue `a`. Under that coupling the slow queue carries at least
//! as much work and at least as many customers at every instant. The
//! [`Coupling::Independent`] variant draws separate uniforms and serves as a
//! negative control.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::invalid;
use crate::fluid::FluidEquilibrium;
use crate::workload::ArrivalStrategy;
use crate::{Belief, Result};

/// How job sizes of the two queues are tied together.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// One uniform per job, scaled by each rate.
    Shared,
    /// Independent uniforms per queue.
    Independent,
}

/// Arrival-time laws of the two types.
#[derive(Debug, Clone, Copy)]
pub enum ArrivalLaw<'a> {
    /// Slot strategies; slot `t` opens at time `t * slot_len`.
    Slots {
        /// Type `a` strategy.
        pa: &'a ArrivalStrategy,
        /// Type `b` strategy.
        pb: &'a ArrivalStrategy,
        /// Length of a slot.
        slot_len: f64,
    },
    /// Atoms at zero plus piecewise-constant densities.
    Fluid(&'a FluidEquilibrium),
}

impl ArrivalLaw<'_> {
    fn check(&self) -> Result<()> {
        match self {
            ArrivalLaw::Slots { pa, pb, slot_len } => {
                if pa.len() != pb.len() {
                    return Err(invalid!("strategies have {} and {} slots", pa.len(), pb.len()));
                }
                if !(*slot_len > 0.0) {
                    return Err(invalid!("slot length {slot_len} must be positive"));
                }
                Ok(())
            }
            ArrivalLaw::Fluid(_) => Ok(()),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, belief: Belief, rng: &mut R) -> f64 {
        let mut u: f64 = rng.random();
        match self {
            ArrivalLaw::Slots { pa, pb, slot_len } => {
                let p = if belief == Belief::A { pa } else { pb };
                let total = p.total();
                u *= total;
                for (t, &m) in p.probs().iter().enumerate() {
                    if u < m {
                        return t as f64 * slot_len;
                    }
                    u -= m;
                }
                (p.len() - 1) as f64 * slot_len
            }
            ArrivalLaw::Fluid(eq) => {
                let i = belief.index();
                if u < eq.atoms[i] {
                    return 0.0;
                }
                u -= eq.atoms[i];
                for s in &eq.segments[i] {
                    let m = s.mass();
                    if u < m {
                        return s.start + u / s.density;
                    }
                    u -= m;
                }
                eq.segments[i].last().map_or(0.0, |s| s.end)
            }
        }
    }
}

/// Outcome of [`coupled_dominance`].
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingReport {
    /// Paths simulated.
    pub paths_checked: usize,
    /// Paths where `V_a < V_b` or `Q_a < Q_b` at some event epoch.
    pub paths_violating: usize,
    /// Event epochs inspected over all paths.
    pub epochs_checked: usize,
    /// Largest `V_b - V_a` seen (nonpositive when dominance holds).
    pub max_work_gap: f64,
    /// `paths_violating == 0`.
    pub dominance_holds: bool,
}

/// State of one FCFS queue right after time `t`.
fn state_at(arrivals: &[f64], departures: &[f64], t: f64) -> (f64, usize) {
    let arrived = arrivals.partition_point(|&a| a <= t);
    if arrived == 0 {
        return (0.0, 0);
    }
    let work = (departures[arrived - 1] - t).max(0.0);
    let in_system = departures[..arrived].iter().filter(|&&d| d > t).count();
    (work, in_system)
}

fn departures(arrivals: &[f64], sizes: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(arrivals.len());
    let mut free = f64::NEG_INFINITY;
    for (&a, &x) in arrivals.iter().zip(sizes) {
        free = free.max(a) + x;
        out.push(free);
    }
    out
}

/// Simulates `n_paths` coupled sample paths and checks `V_a >= V_b` and
/// `Q_a >= Q_b` at every arrival and departure epoch of either queue.
///
/// `rates` are the service rates `(mu_a, mu_b)` with `mu_a <= mu_b`.
pub fn coupled_dominance<R: Rng + ?Sized>(
    populations: [f64; 2],
    law: ArrivalLaw<'_>,
    rates: [f64; 2],
    coupling: Coupling,
    n_paths: usize,
    rng: &mut R,
) -> Result<CouplingReport> {
    law.check()?;
    let [mu_a, mu_b] = rates;
    if !(mu_a > 0.0 && mu_a <= mu_b && mu_b.is_finite()) {
        return Err(invalid!("need 0 < mu_a <= mu_b, got ({mu_a}, {mu_b})"));
    }
    if populations.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return Err(invalid!("populations {populations:?} must be nonnegative"));
    }
    let counts = [
        (populations[0] > 0.0).then(|| Poisson::new(populations[0])).transpose(),
        (populations[1] > 0.0).then(|| Poisson::new(populations[1])).transpose(),
    ];
    let [Ok(count_a), Ok(count_b)] = counts else {
        return Err(invalid!("bad Poisson means {populations:?}"));
    };

    let mut report = CouplingReport {
        paths_checked: n_paths,
        paths_violating: 0,
        epochs_checked: 0,
        max_work_gap: f64::NEG_INFINITY,
        dominance_holds: true,
    };
    let mut arrivals = Vec::new();
    let mut epochs = Vec::new();
    for _ in 0..n_paths {
        arrivals.clear();
        for (belief, count) in [(Belief::A, &count_a), (Belief::B, &count_b)] {
            let n = count.as_ref().map_or(0.0, |c| c.sample(rng)) as usize;
            arrivals.extend((0..n).map(|_| law.sample(belief, rng)));
        }
        arrivals.sort_by(f64::total_cmp);
        let mut size_a = Vec::with_capacity(arrivals.len());
        let mut size_b = Vec::with_capacity(arrivals.len());
        for _ in 0..arrivals.len() {
            // 1 - U lies in (0, 1], so the log is finite.
            let u = 1.0 - rng.random::<f64>();
            let v = match coupling {
                Coupling::Shared => u,
                Coupling::Independent => 1.0 - rng.random::<f64>(),
            };
            size_a.push(-libm::log(u) / mu_a);
            size_b.push(-libm::log(v) / mu_b);
        }
        let dep_a = departures(&arrivals, &size_a);
        let dep_b = departures(&arrivals, &size_b);

        epochs.clear();
        epochs.extend_from_slice(&arrivals);
        epochs.extend_from_slice(&dep_a);
        epochs.extend_from_slice(&dep_b);
        epochs.sort_by(f64::total_cmp);
        epochs.dedup();
        let mut violated = false;
        for &t in &epochs {
            let (va, qa) = state_at(&arrivals, &dep_a, t);
            let (vb, qb) = state_at(&arrivals, &dep_b, t);
            report.max_work_gap = report.max_work_gap.max(vb - va);
            violated |= va < vb || qa < qb;
        }
        report.epochs_checked += epochs.len();
        report.paths_violating += violated as usize;
    }
    report.dominance_holds = report.paths_violating == 0;
    if report.epochs_checked == 0 {
        report.max_work_gap = 0.0;
    }
    Ok(report)
}
