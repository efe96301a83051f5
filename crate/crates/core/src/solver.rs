//! Equilibria of the slotted game.
//!
//! A strategy pair is an equilibrium iff for each type there is a level
//! `wbar_i` with
//!
//! ```text
//! p_{i,t} = ( (2 / chi_i) (wbar_i - E[V_{i,t-}]) - lambda_{-i} p_{-i,t} )^+ / lambda_i .
//! ```
//!
//! [`best_response`] finds the first slot of the support by a forward scan and
//! the atom there by bisection; every later slot then follows from the
//! display. [`iterated_best_response`] alternates the two types from
//! everybody-at-the-opening until the strategies stop moving.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dists::ServiceDist;
use crate::error::invalid;
use crate::signal::{posterior_views, SignalParams};
use crate::workload::{profile_from_rates, ArrivalStrategy, SlotGame, WorkloadState, SIMPLEX_TOL};
use crate::{Belief, Error, Result};

/// Distance used to decide that the iteration has settled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    /// `max_t |p_t - q_t|`.
    Sup,
    /// `sum_t |p_t - q_t|`.
    L1,
}

impl Norm {
    /// Distance between two strategies.
    pub fn distance(self, p: &ArrivalStrategy, q: &ArrivalStrategy) -> f64 {
        match self {
            Norm::Sup => p.sup_distance(q),
            Norm::L1 => {
                let n = p.len().max(q.len());
                (0..n).map(|t| (p.get(t) - q.get(t)).abs()).sum()
            }
        }
    }
}

/// Tolerances and caps of the solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// `epsilon`: accepted `|sum(p) - 1|` of a best response.
    pub mass_tol: f64,
    /// `delta`: stop once successive iterates are this close.
    pub step_tol: f64,
    /// Cap on outer iterations.
    pub max_outer: usize,
    /// Distance between iterates.
    pub norm: Norm,
    /// Cap on bisection steps for one candidate first slot.
    pub max_bisection: usize,
    /// Probabilities at or below this are treated as zero when reading off
    /// supports.
    pub mass_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mass_tol: 1e-5,
            step_tol: 1e-5,
            max_outer: 500,
            norm: Norm::Sup,
            max_bisection: 200,
            mass_floor: 1e-8,
        }
    }
}

impl SolverConfig {
    /// Fails on nonpositive tolerances or zero caps.
    pub fn validate(&self) -> Result<()> {
        if !(self.mass_tol > 0.0 && self.mass_tol < 1.0) {
            return Err(invalid!("mass tolerance {} outside (0, 1)", self.mass_tol));
        }
        if !(self.step_tol > 0.0) {
            return Err(invalid!("step tolerance {} must be positive", self.step_tol));
        }
        if self.max_outer == 0 || self.max_bisection == 0 {
            return Err(invalid!("iteration caps must be at least 1"));
        }
        if !(self.mass_floor >= 0.0 && self.mass_floor < 1.0) {
            return Err(invalid!("mass floor {} outside [0, 1)", self.mass_floor));
        }
        Ok(())
    }
}

/// Outcome of the bisection for one candidate first slot.
#[derive(Debug, Clone, PartialEq)]
pub enum TailSearch {
    /// A strategy starting at the candidate slot with mass within tolerance
    /// of one.
    Found {
        /// Unnormalized probabilities over all slots.
        probs: Vec<f64>,
        /// Their total.
        mass: f64,
        /// Common wait on the support.
        wbar: f64,
    },
    /// Even an empty atom overshoots; try the next slot.
    Advance {
        /// The next candidate.
        next: usize,
    },
}

/// Bookkeeping of one bisection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BisectionStats {
    /// Forward passes evaluated.
    pub trials: usize,
    /// Pairs of trials where a smaller atom overshot while a larger one
    /// undershot.
    pub monotonicity_violations: usize,
}

impl BisectionStats {
    fn absorb(&mut self, other: BisectionStats) {
        self.trials += other.trials;
        self.monotonicity_violations += other.monotonicity_violations;
    }
}

struct Trial {
    atom: f64,
    mass: f64,
    /// False when the pass stopped early because the mass already exceeded
    /// `1 + epsilon`; `mass` is then a lower bound.
    complete: bool,
    probs: Vec<f64>,
    wbar: f64,
}

struct TailProblem<'a> {
    game: &'a SlotGame,
    belief: Belief,
    other: &'a [f64],
    theta: usize,
    prefix: &'a WorkloadState,
    cfg: &'a SolverConfig,
}

impl TailProblem<'_> {
    fn run(&self, atom: f64) -> Result<Trial> {
        let lam = self.game.population(self.belief);
        let lam_o = self.game.population(self.belief.other());
        let chi = self.game.service(self.belief).mean();
        let last = self.game.last_slot();
        let cap = 1.0 + self.cfg.mass_tol;

        let mut probs = vec![0.0; self.game.slots()];
        let mut state = self.prefix.clone();
        let theta = self.theta;
        let rate = lam * atom + lam_o * self.other[theta];
        let wbar = state.wait(self.game, rate);
        probs[theta] = atom;
        let mut mass = atom;
        let mut complete = true;
        if theta < last {
            state.advance(self.game, rate)?;
        }
        #[allow(clippy::needless_range_loop)]
        for t in theta + 1..=last {
            let p = ((2.0 / chi) * (wbar - state.mean()) - lam_o * self.other[t]).max(0.0) / lam;
            probs[t] = p;
            mass += p;
            if mass >= cap {
                complete = t == last;
                break;
            }
            if t < last {
                state.advance(self.game, lam * p + lam_o * self.other[t])?;
            }
        }
        Ok(Trial {
            atom,
            mass,
            complete,
            probs,
            wbar,
        })
    }

    fn search(&self) -> Result<(TailSearch, BisectionStats)> {
        let eps = self.cfg.mass_tol;
        let mut stats = BisectionStats::default();
        let mut seen: Vec<(f64, f64, bool)> = Vec::new();
        let mut record = |t: &Trial, stats: &mut BisectionStats| {
            stats.trials += 1;
            let over = t.mass >= 1.0 + eps;
            let under = t.complete && t.mass <= 1.0 - eps;
            for &(x, m, c) in &seen {
                let (o_over, o_under) = (m >= 1.0 + eps, c && m <= 1.0 - eps);
                if (x < t.atom && o_over && under) || (t.atom < x && over && o_under) {
                    stats.monotonicity_violations += 1;
                }
            }
            seen.push((t.atom, t.mass, t.complete));
        };

        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let left = self.run(lo)?;
        record(&left, &mut stats);
        let mut left_mass = left.mass;
        for _ in 0..self.cfg.max_bisection {
            let mid = 0.5 * (lo + hi);
            let m = self.run(mid)?;
            record(&m, &mut stats);
            if m.complete && m.mass > 1.0 - eps && m.mass < 1.0 + eps {
                return Ok((
                    TailSearch::Found {
                        probs: m.probs,
                        mass: m.mass,
                        wbar: m.wbar,
                    },
                    stats,
                ));
            }
            if left_mass > 1.0 {
                return Ok((TailSearch::Advance { next: self.theta + 1 }, stats));
            }
            if m.mass < 1.0 {
                lo = mid;
                left_mass = m.mass;
            } else {
                hi = mid;
            }
        }
        Err(Error::NumericFailure(format!(
            "bisection at slot {} for type {} did not reach mass 1 +- {eps} in {} steps \
             ({} monotonicity violations)",
            self.theta, self.belief, self.cfg.max_bisection, stats.monotonicity_violations
        )))
    }
}

fn check_other(game: &SlotGame, p_minus: &ArrivalStrategy) -> Result<()> {
    if p_minus.len() != game.slots() {
        return Err(Error::InvalidStrategy(format!(
            "strategy has {} slots, game has {}",
            p_minus.len(),
            game.slots()
        )));
    }
    p_minus.check_simplex(SIMPLEX_TOL)
}

fn prefix_state(game: &SlotGame, belief: Belief, p_minus: &ArrivalStrategy, theta: usize) -> Result<WorkloadState> {
    let lam_o = game.population(belief.other());
    let mut state = WorkloadState::new(belief);
    for t in 0..theta {
        state.advance(game, lam_o * p_minus.get(t))?;
    }
    Ok(state)
}

/// Bisection on the atom `p_{i,theta}` in `[0, 1]`, with type `i` absent
/// before `theta` and later slots filled in from the equilibrium display.
pub fn bisection_tail(
    game: &SlotGame,
    belief: Belief,
    p_minus: &ArrivalStrategy,
    theta: usize,
    cfg: &SolverConfig,
) -> Result<(TailSearch, BisectionStats)> {
    cfg.validate()?;
    check_other(game, p_minus)?;
    if theta > game.last_slot() {
        return Err(invalid!("slot {theta} outside 0..={}", game.last_slot()));
    }
    if !(game.population(belief) > 0.0) {
        return Err(invalid!("type {belief} has no population"));
    }
    let prefix = prefix_state(game, belief, p_minus, theta)?;
    TailProblem {
        game,
        belief,
        other: p_minus.probs(),
        theta,
        prefix: &prefix,
        cfg,
    }
    .search()
}

/// Symmetric best response of one type.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    /// Normalized strategy.
    pub strategy: ArrivalStrategy,
    /// Mass found by the bisection before normalization.
    pub raw_mass: f64,
    /// First slot of the support.
    pub first_slot: usize,
    /// Common wait on the support.
    pub wbar: f64,
    /// Bisection bookkeeping summed over candidate slots.
    pub stats: BisectionStats,
}

/// Best response of type `belief` to `p_minus`.
///
/// Candidate first slots are scanned in order; a slot is tried only if its
/// wait with type `i` absent beats every earlier slot.
pub fn best_response(
    game: &SlotGame,
    belief: Belief,
    p_minus: &ArrivalStrategy,
    cfg: &SolverConfig,
) -> Result<BestResponse> {
    cfg.validate()?;
    check_other(game, p_minus)?;
    let lam_o = game.population(belief.other());
    let other = p_minus.probs();

    if !(game.population(belief) > 0.0) {
        // Nobody of this type: a lone arrival just picks the emptiest slot.
        let rates: Vec<f64> = other.iter().map(|p| lam_o * p).collect();
        let waits = profile_from_rates(game, belief, &rates)?.waits;
        let (best, wbar) = waits
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (t, w)| if w < acc.1 { (t, w) } else { acc });
        return Ok(BestResponse {
            strategy: ArrivalStrategy::point(game.slots(), best)?,
            raw_mass: 1.0,
            first_slot: best,
            wbar,
            stats: BisectionStats::default(),
        });
    }

    let mut stats = BisectionStats::default();
    let mut state = WorkloadState::new(belief);
    let mut w_min = f64::INFINITY;
    for theta in 0..=game.last_slot() {
        let rate = lam_o * other[theta];
        let w = state.wait(game, rate);
        if w < w_min {
            let problem = TailProblem {
                game,
                belief,
                other,
                theta,
                prefix: &state,
                cfg,
            };
            let (outcome, s) = problem.search()?;
            stats.absorb(s);
            if let TailSearch::Found { probs, mass, wbar } = outcome {
                return Ok(BestResponse {
                    strategy: ArrivalStrategy::new(probs)?.normalized()?,
                    raw_mass: mass,
                    first_slot: theta,
                    wbar,
                    stats,
                });
            }
        }
        w_min = w_min.min(w);
        if theta < game.last_slot() {
            state.advance(game, rate)?;
        }
    }
    Err(Error::InfeasibleResponse(format!(
        "no first slot admits a best response for type {belief}"
    )))
}

/// Equilibrium diagnostics of a strategy pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    /// Population-average wait `sum_t p_{i,t} w_{i,t}` per type.
    pub mean_waits: [f64; 2],
    /// Per-type expected waits `w_{i,t}` in every slot.
    pub waits: [Vec<f64>; 2],
    /// Slots with probability above the mass floor.
    pub supports: [Vec<usize>; 2],
    /// Per-type `max - min` of the wait over the support.
    pub support_spread: [f64; 2],
    /// Per-type `max_t (wbar_i - w_{i,t})^+` over slots off the support.
    pub offsupport_violation: [f64; 2],
    /// Largest of `support_spread`.
    pub max_support_spread: f64,
    /// Largest of `offsupport_violation`.
    pub max_offsupport_violation: f64,
    /// Tolerance the pass flag refers to.
    pub tol: f64,
    /// Outer iterations used (zero for a bare verification).
    pub iterations: usize,
    /// Whether the iteration met its stopping rule.
    pub converged: bool,
    /// Distance between the last two iterates.
    pub last_step: f64,
    /// Monotonicity violations seen by the bisections.
    pub monotonicity_violations: usize,
}

impl EquilibriumReport {
    /// Both conditions hold within `tol`.
    pub fn passed(&self) -> bool {
        self.max_support_spread <= self.tol && self.max_offsupport_violation <= self.tol
    }
}

/// Checks the equilibrium conditions: constant wait on each type's support
/// and no lower wait elsewhere, both within `tol` time units.
pub fn verify_equilibrium(
    game: &SlotGame,
    pa: &ArrivalStrategy,
    pb: &ArrivalStrategy,
    tol: f64,
    mass_floor: f64,
) -> Result<EquilibriumReport> {
    let rates = game.arrival_rates(pa, pb)?;
    pa.check_simplex(SIMPLEX_TOL)?;
    pb.check_simplex(SIMPLEX_TOL)?;
    let mut report = EquilibriumReport {
        mean_waits: [0.0; 2],
        waits: [Vec::new(), Vec::new()],
        supports: [Vec::new(), Vec::new()],
        support_spread: [0.0; 2],
        offsupport_violation: [0.0; 2],
        max_support_spread: 0.0,
        max_offsupport_violation: 0.0,
        tol,
        iterations: 0,
        converged: true,
        last_step: 0.0,
        monotonicity_violations: 0,
    };
    for (belief, p) in [(Belief::A, pa), (Belief::B, pb)] {
        let i = belief.index();
        let waits = profile_from_rates(game, belief, &rates)?.waits;
        let support = p.support(mass_floor);
        let on: Vec<f64> = support.iter().map(|&t| waits[t]).collect();
        let hi = on.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = on.iter().copied().fold(f64::INFINITY, f64::min);
        let total: f64 = p.probs().iter().sum();
        let wbar = p.probs().iter().zip(&waits).map(|(p, w)| p * w).sum::<f64>() / total;
        let violation = (0..waits.len())
            .filter(|t| !support.contains(t))
            .map(|t| (wbar - waits[t]).max(0.0))
            .fold(0.0, f64::max);
        report.mean_waits[i] = wbar;
        report.support_spread[i] = if on.is_empty() { 0.0 } else { hi - lo };
        report.offsupport_violation[i] = violation;
        report.waits[i] = waits;
        report.supports[i] = support;
    }
    report.max_support_spread = report.support_spread[0].max(report.support_spread[1]);
    report.max_offsupport_violation = report.offsupport_violation[0].max(report.offsupport_violation[1]);
    Ok(report)
}

/// Output of [`iterated_best_response`].
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    /// Strategy of type `a`.
    pub pa: ArrivalStrategy,
    /// Strategy of type `b`.
    pub pb: ArrivalStrategy,
    /// Verification of the final pair plus iteration diagnostics.
    pub report: EquilibriumReport,
    /// Distance between successive iterates, one entry per outer step.
    pub steps: Vec<f64>,
}

/// Default verification tolerance, in time units.
pub const VERIFY_TOL: f64 = 5e-4;

/// Iterated best response from everybody-at-the-opening.
///
/// Non-convergence within `max_outer` steps is reported through
/// `report.converged`, not as an error.
pub fn iterated_best_response(game: &SlotGame, cfg: &SolverConfig) -> Result<Equilibrium> {
    cfg.validate()?;
    let slots = game.slots();
    let mut pa = ArrivalStrategy::point(slots, 0)?;
    let mut pb = ArrivalStrategy::point(slots, 0)?;
    let mut steps = Vec::new();
    let mut violations = 0;
    let mut converged = false;
    for _ in 0..cfg.max_outer {
        let ra = best_response(game, Belief::A, &pb, cfg)?;
        let rb = best_response(game, Belief::B, &ra.strategy, cfg)?;
        violations += ra.stats.monotonicity_violations + rb.stats.monotonicity_violations;
        let step = cfg
            .norm
            .distance(&ra.strategy, &pa)
            .max(cfg.norm.distance(&rb.strategy, &pb));
        pa = ra.strategy;
        pb = rb.strategy;
        steps.push(step);
        if step < cfg.step_tol {
            converged = true;
            break;
        }
    }
    let mut report = verify_equilibrium(game, &pa, &pb, VERIFY_TOL, cfg.mass_floor)?;
    report.iterations = steps.len();
    report.converged = converged;
    report.last_step = steps.last().copied().unwrap_or(0.0);
    report.monotonicity_violations = violations;
    Ok(Equilibrium { pa, pb, report, steps })
}

/// Equilibria under the posterior views of both signals.
#[derive(Debug, Clone, PartialEq)]
pub struct FrSolution {
    /// Kept strategy of signal-`a` holders (from their own view).
    pub pa: ArrivalStrategy,
    /// Kept strategy of signal-`b` holders (from their own view).
    pub pb: ArrivalStrategy,
    /// The full solve seen by signal `a` and by signal `b`.
    pub views: [Equilibrium; 2],
    /// The game each view solved.
    pub games: [SlotGame; 2],
}

/// Game in which holders of signal `i` play with populations `nu_i` and
/// posterior services `(z_a, z_b)`.
pub fn posterior_game(signal: &SignalParams, belief: Belief, slot_len: usize, last_slot: usize) -> Result<SlotGame> {
    let [va, vb] = posterior_views(signal)?;
    let populations = match belief {
        Belief::A => va.populations,
        Belief::B => vb.populations,
    };
    SlotGame::new(populations, slot_len, last_slot, [va.service, vb.service])
}

/// Fully rational solve: each signal's strategy is taken from the
/// equilibrium of its own posterior game.
pub fn solve_fr(signal: &SignalParams, slot_len: usize, last_slot: usize, cfg: &SolverConfig) -> Result<FrSolution> {
    let ga = posterior_game(signal, Belief::A, slot_len, last_slot)?;
    let gb = posterior_game(signal, Belief::B, slot_len, last_slot)?;
    let ea = iterated_best_response(&ga, cfg)?;
    let eb = iterated_best_response(&gb, cfg)?;
    Ok(FrSolution {
        pa: ea.pa.clone(),
        pb: eb.pb.clone(),
        views: [ea, eb],
        games: [ga, gb],
    })
}

/// Game in which each signal is taken at face value: populations split by
/// the signal marginals, services the mode laws.
pub fn face_value_game(signal: &SignalParams, slot_len: usize, last_slot: usize) -> Result<SlotGame> {
    let services: [ServiceDist; 2] = [
        signal.service(Belief::A).clone(),
        signal.service(Belief::B).clone(),
    ];
    SlotGame::new(signal.signal_populations(), slot_len, last_slot, services)
}
