//! Random server mode with noisy signals.
//!
//! Each day the server is slow (mode `a`) with probability `p`. Every customer
//! independently sees the true mode with probability `q > 1/2` and the wrong
//! one otherwise. A customer holding signal `i` therefore faces a Poisson
//! population split `nu_i` and a posterior service mixture `z_i`.

use crate::dists::ServiceDist;
use crate::error::invalid;
use crate::{Belief, Result};

/// Parameters of the random environment and its signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalParams {
    population: f64,
    slow_prob: f64,
    accuracy: f64,
    slow: ServiceDist,
    fast: ServiceDist,
}

impl SignalParams {
    /// `population` is the Poisson mean `lambda`, `slow_prob` is `p`,
    /// `accuracy` is `q`; `slow` and `fast` are the mode service laws.
    pub fn new(
        population: f64,
        slow_prob: f64,
        accuracy: f64,
        slow: ServiceDist,
        fast: ServiceDist,
    ) -> Result<Self> {
        check_ranges(slow_prob, accuracy)?;
        if !(population >= 0.0) || !population.is_finite() {
            return Err(invalid!("population {population} must be nonnegative"));
        }
        if !(slow.mean() > fast.mean()) {
            return Err(invalid!(
                "slow mode mean {} must exceed fast mode mean {}",
                slow.mean(),
                fast.mean()
            ));
        }
        Ok(Self {
            population,
            slow_prob,
            accuracy,
            slow,
            fast,
        })
    }

    /// Poisson mean of the total population.
    pub fn population(&self) -> f64 {
        self.population
    }

    /// Probability of the slow mode.
    pub fn slow_prob(&self) -> f64 {
        self.slow_prob
    }

    /// Probability that a signal is correct.
    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    /// Service law in the given mode.
    pub fn service(&self, mode: Belief) -> &ServiceDist {
        match mode {
            Belief::A => &self.slow,
            Belief::B => &self.fast,
        }
    }

    /// Mean populations `(lambda_a, lambda_b)` holding each signal.
    pub fn signal_populations(&self) -> [f64; 2] {
        let (a, b) = signal_marginals(self.slow_prob, self.accuracy);
        [self.population * a, self.population * b]
    }
}

fn check_ranges(p: f64, q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid!("slow-mode probability {p} outside [0, 1]"));
    }
    if !(q > 0.5 && q <= 1.0) {
        return Err(invalid!("signal accuracy {q} outside (1/2, 1]"));
    }
    Ok(())
}

/// `(P(Y = a), P(Y = b))`.
pub fn signal_marginals(p: f64, q: f64) -> (f64, f64) {
    (p * q + (1.0 - p) * (1.0 - q), p * (1.0 - q) + (1.0 - p) * q)
}

/// Mean sizes `(nu_a, nu_b)` of the two signal populations as seen by a
/// customer holding signal `a` and `b`; `nu_i = lambda (alpha_ai, alpha_bi)`.
///
/// Fails when one of the signals has probability zero, since the conditional
/// view of that signal is then undefined.
pub fn conditional_split(p: f64, q: f64, population: f64) -> Result<([f64; 2], [f64; 2])> {
    check_ranges(p, q)?;
    let (ya, yb) = signal_marginals(p, q);
    if ya == 0.0 || yb == 0.0 {
        return Err(invalid!("signal with zero probability at p = {p}, q = {q}"));
    }
    let r = 1.0 - q;
    let aa = (p * q * q + (1.0 - p) * r * r) / ya;
    let ba = (p * q * r + (1.0 - p) * r * q) / ya;
    let ab = (p * r * q + (1.0 - p) * q * r) / yb;
    let bb = (p * r * r + (1.0 - p) * q * q) / yb;
    Ok((
        [population * aa, population * ba],
        [population * ab, population * bb],
    ))
}

/// What a customer holding one signal believes.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorView {
    /// The signal held.
    pub signal: Belief,
    /// Mean populations holding signal `a` and `b`, as seen from this signal.
    pub populations: [f64; 2],
    /// Posterior mode probabilities `(eta_ai, eta_bi)`.
    pub mode_weights: [f64; 2],
    /// Posterior service mixture.
    pub service: ServiceDist,
    /// Posterior mean service time `zeta_i`.
    pub mean_service: f64,
}

/// Posterior views of the `a` and `b` signal holders.
pub fn posterior_views(params: &SignalParams) -> Result<[PosteriorView; 2]> {
    let (p, q) = (params.slow_prob, params.accuracy);
    let (nu_a, nu_b) = conditional_split(p, q, params.population)?;
    let (ya, yb) = signal_marginals(p, q);
    let eta_a = [p * q / ya, (1.0 - p) * (1.0 - q) / ya];
    let eta_b = [p * (1.0 - q) / yb, (1.0 - p) * q / yb];
    let (chi_a, chi_b) = (params.slow.mean(), params.fast.mean());
    let zeta_a = (chi_a * p * q + chi_b * (1.0 - p) * (1.0 - q)) / ya;
    let zeta_b = (chi_a * p * (1.0 - q) + chi_b * (1.0 - p) * q) / yb;

    let view = |signal, populations, mode_weights: [f64; 2], mean_service| -> Result<PosteriorView> {
        let service = if mode_weights[1] == 0.0 {
            params.slow.clone()
        } else if mode_weights[0] == 0.0 {
            params.fast.clone()
        } else {
            ServiceDist::mixture(mode_weights, &params.slow, &params.fast)?
        };
        Ok(PosteriorView {
            signal,
            populations,
            mode_weights,
            service,
            mean_service,
        })
    };
    Ok([
        view(Belief::A, nu_a, eta_a, zeta_a)?,
        view(Belief::B, nu_b, eta_b, zeta_b)?,
    ])
}
