//! Side-by-side summaries of learned and equilibrium arrival distributions.

use alloc::format;
use alloc::vec::Vec;

use crate::abm::AbmResult;
use crate::solver::{Equilibrium, FrSolution};
use crate::{Belief, Error, Result};

/// Running sums of `probs`.
pub fn cdf(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

/// `max_t |F_p(t) - F_q(t)|` over a common slot grid.
pub fn cdf_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::InvalidStrategy(format!(
            "distributions over {} and {} slots",
            p.len(),
            q.len()
        )));
    }
    Ok(cdf(p)
        .iter()
        .zip(&cdf(q))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Number of slots with probability above `floor`.
pub fn support_size(p: &[f64], floor: f64) -> usize {
    p.iter().filter(|&&x| x > floor).count()
}

/// One signal's row of the comparison between the learning model and the two
/// equilibrium notions.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefComparison {
    /// The signal.
    pub belief: Belief,
    /// Support sizes of the learned, face-value and posterior distributions.
    pub support: [usize; 3],
    /// Mean waits in the same order.
    pub mean_wait: [f64; 3],
    /// CDF distance from the learned distribution to the face-value one.
    pub distance_br: f64,
    /// CDF distance from the learned distribution to the posterior one.
    pub distance_fr: f64,
}

/// Compares a learning run with the face-value equilibrium `br` and the
/// posterior solve `fr` on the same slot grid.
///
/// Equilibrium waits are the ones each signal expects in its own game.
pub fn compare_runs(abm: &AbmResult, br: &Equilibrium, fr: &FrSolution, floor: f64) -> Result<[BeliefComparison; 2]> {
    let row = |belief: Belief| -> Result<BeliefComparison> {
        let i = belief.index();
        let learned = &abm.pbar[i];
        let face = match belief {
            Belief::A => &br.pa,
            Belief::B => &br.pb,
        };
        let post = match belief {
            Belief::A => &fr.pa,
            Belief::B => &fr.pb,
        };
        Ok(BeliefComparison {
            belief,
            support: [
                support_size(learned, floor),
                support_size(face.probs(), floor),
                support_size(post.probs(), floor),
            ],
            mean_wait: [
                abm.wbar_pop[i],
                br.report.mean_waits[i],
                fr.views[i].report.mean_waits[i],
            ],
            distance_br: cdf_distance(learned, face.probs())?,
            distance_fr: cdf_distance(learned, post.probs())?,
        })
    };
    Ok([row(Belief::A)?, row(Belief::B)?])
}
