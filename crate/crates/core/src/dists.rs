//! Integer-valued probability laws: truncated pmfs, service-time laws and
//! compound-Poisson arrival work.
//!
//! Every [`Pmf`] is stored on `0..=K` together with a certified upper bound on
//! the probability mass that lies beyond `K` (or was lost to truncation
//! upstream). Operations propagate that bound so the error of a long chain of
//! convolutions stays quantifiable.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::invalid;
use crate::{Error, Result};

/// Default bound on the truncated tail mass of constructed pmfs.
pub const DEFAULT_TAIL_EPS: f64 = 1e-12;

/// Tail bound used when truncating service-time laws.
///
/// Kept three orders below [`DEFAULT_TAIL_EPS`] so that the compound of a
/// moderate number of jumps still certifies its own tail at the default level.
pub const SERVICE_TAIL_EPS: f64 = 1e-15;

/// Rates above this are handled by splitting the Poisson count in halves,
/// since `exp(-rate)` underflows for rates near 745.
const PANJER_SPLIT_RATE: f64 = 500.0;

/// Probability mass function on `0..=K` with a bound on the missing tail.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    mass: Vec<f64>,
    tail_bound: f64,
}

/// Mean, variance and coefficient of variation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    /// First moment.
    pub mean: f64,
    /// Central second moment.
    pub variance: f64,
    /// Standard deviation over mean (zero when the mean is zero).
    pub cv: f64,
}

impl Pmf {
    /// Builds a pmf from explicit masses.
    ///
    /// The stored tail bound is the larger of `tail_bound` and the measured
    /// deficit `1 - sum(mass)`.
    pub fn new(mass: Vec<f64>, tail_bound: f64) -> Result<Self> {
        if mass.is_empty() {
            return Err(invalid!("pmf needs at least one entry"));
        }
        if let Some((k, m)) = mass
            .iter()
            .enumerate()
            .find(|(_, m)| !(m.is_finite() && (0.0..=1.0).contains(*m)))
        {
            return Err(invalid!("pmf mass[{k}] = {m} is not a probability"));
        }
        if !(tail_bound.is_finite() && (0.0..=1.0).contains(&tail_bound)) {
            return Err(invalid!("tail bound {tail_bound} is not a probability"));
        }
        let total: f64 = mass.iter().sum();
        if total > 1.0 + 1e-9 {
            return Err(invalid!("pmf sums to {total} > 1"));
        }
        Ok(Self::with_tail(mass, tail_bound))
    }

    pub(crate) fn with_tail(mass: Vec<f64>, tail_bound: f64) -> Self {
        let total: f64 = mass.iter().sum();
        let deficit = (1.0 - total).max(0.0);
        Self {
            mass,
            tail_bound: tail_bound.max(deficit).min(1.0),
        }
    }

    /// Point mass at `k`.
    pub fn point(k: usize) -> Self {
        let mut mass = vec![0.0; k + 1];
        mass[k] = 1.0;
        Self {
            mass,
            tail_bound: 0.0,
        }
    }

    /// Masses on `0..=K`.
    #[inline]
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// `P(X = k)`, zero beyond the truncation bound.
    #[inline]
    pub fn get(&self, k: usize) -> f64 {
        self.mass.get(k).copied().unwrap_or(0.0)
    }

    /// Truncation bound `K`.
    #[inline]
    pub fn max_value(&self) -> usize {
        self.mass.len() - 1
    }

    /// Upper bound on mass not represented in [`Pmf::mass`].
    #[inline]
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// Sum of the stored masses.
    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Mean over the stored support.
    pub fn mean(&self) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .map(|(k, m)| k as f64 * m)
            .sum()
    }

    /// Mean, variance and CV over the stored support.
    pub fn moments(&self) -> Moments {
        let mean = self.mean();
        let second: f64 = self
            .mass
            .iter()
            .enumerate()
            .map(|(k, m)| (k as f64) * (k as f64) * m)
            .sum();
        let variance = (second - mean * mean).max(0.0);
        let cv = if mean > 0.0 {
            libm::sqrt(variance) / mean
        } else {
            0.0
        };
        Moments { mean, variance, cv }
    }

    /// Drops trailing entries whose combined mass does not exceed `budget` and
    /// charges the dropped mass to the tail bound.
    pub fn trim_tail(&mut self, budget: f64) {
        let mut dropped = 0.0;
        while self.mass.len() > 1 {
            let last = *self.mass.last().unwrap();
            if dropped + last > budget {
                break;
            }
            dropped += last;
            self.mass.pop();
        }
        self.tail_bound = (self.tail_bound + dropped).min(1.0);
    }

    /// Convex combination of pmfs.
    pub fn mixture(parts: &[(f64, &Pmf)]) -> Result<Pmf> {
        let wsum: f64 = parts.iter().map(|(w, _)| *w).sum();
        if parts.iter().any(|(w, _)| !(*w >= 0.0)) || libm::fabs(wsum - 1.0) > 1e-12 {
            return Err(invalid!("mixture weights must be nonnegative and sum to 1"));
        }
        let len = parts.iter().map(|(_, p)| p.mass.len()).max().unwrap_or(1);
        let mut mass = vec![0.0; len];
        let mut tail = 0.0;
        for (w, p) in parts {
            for (k, m) in p.mass.iter().enumerate() {
                mass[k] += w * m;
            }
            tail += w * p.tail_bound;
        }
        Ok(Pmf::with_tail(mass, tail))
    }

    /// Largest `|self(k) - other(k)|` over both supports.
    pub fn sup_distance(&self, other: &Pmf) -> f64 {
        let n = self.mass.len().max(other.mass.len());
        (0..n)
            .map(|k| libm::fabs(self.get(k) - other.get(k)))
            .fold(0.0, f64::max)
    }
}

/// Convolution of two pmfs (law of the independent sum).
pub fn convolve(f: &Pmf, g: &Pmf) -> Pmf {
    let mut out = vec![0.0; f.mass.len() + g.mass.len() - 1];
    for (i, &a) in f.mass.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for (o, &b) in out[i..].iter_mut().zip(&g.mass) {
            *o += a * b;
        }
    }
    Pmf::with_tail(out, f.tail_bound + g.tail_bound)
}

/// Law of `X_1 + ... + X_N` with `N ~ Poisson(rate)` and iid jumps `X_k`
/// distributed as `jumps` (which must put no mass at zero).
///
/// Uses the Panjer recursion `h(0) = exp(-rate)`,
/// `h(k) = rate/k * sum_{j=1..k} j x(j) h(k-j)`, extending `K` until the
/// missing mass is below `tail_eps` (plus the unavoidable loss from the jump
/// law's own truncation).
pub fn compound_poisson(rate: f64, jumps: &Pmf, tail_eps: f64) -> Result<Pmf> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(invalid!("Poisson rate {rate} must be finite and nonnegative"));
    }
    if jumps.get(0) != 0.0 {
        return Err(invalid!("compound jumps must be positive (x(0) = 0)"));
    }
    if !(tail_eps > 0.0) {
        return Err(invalid!("tail tolerance {tail_eps} must be positive"));
    }
    if rate == 0.0 {
        return Ok(Pmf::point(0));
    }
    if rate > PANJER_SPLIT_RATE {
        let half = compound_poisson(rate / 2.0, jumps, tail_eps / 4.0)?;
        let mut full = convolve(&half, &half);
        full.trim_tail(tail_eps / 2.0);
        return Ok(full);
    }

    let weighted: Vec<(usize, f64)> = jumps
        .mass
        .iter()
        .enumerate()
        .filter(|(_, m)| **m > 0.0)
        .map(|(j, m)| (j, j as f64 * m))
        .collect();
    let m = jumps.moments();
    let second = m.variance + m.mean * m.mean;
    let cap = (rate * m.mean + 50.0 * libm::sqrt(rate * second)) as usize
        + 10 * jumps.max_value()
        + 64;
    let floor = tail_eps + rate * jumps.tail_bound;

    let mut h = Vec::with_capacity(cap.min(1 << 16));
    h.push(libm::exp(-rate));
    let mut cum = h[0];
    let mut k = 0usize;
    while 1.0 - cum > floor && k < cap {
        k += 1;
        let mut s = 0.0;
        for &(j, c) in &weighted {
            if j > k {
                break;
            }
            s += c * h[k - j];
        }
        let hk = rate / k as f64 * s;
        h.push(hk);
        cum += hk;
    }
    let missing = (1.0 - cum).max(0.0);
    if missing > floor + 1e-9 {
        return Err(Error::NumericFailure(alloc::format!(
            "compound Poisson tail {missing} not resolved within {cap} terms"
        )));
    }
    Ok(Pmf::with_tail(h, missing))
}

/// Family of a service-time law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ServiceKind {
    /// Point mass at an integer mean.
    Deterministic,
    /// Geometric on `{1, 2, ...}` with success probability `1/mean`.
    Geometric,
    /// Two-component geometric mixture: unit service with probability
    /// `unit_weight`, otherwise geometric with mean `long_mean`.
    GeometricMixture {
        /// Weight of the unit-mean component.
        unit_weight: f64,
        /// Mean of the long geometric component.
        long_mean: f64,
    },
    /// Posterior mixture of two service laws.
    Posterior {
        /// Weights of the slow and fast component.
        weights: [f64; 2],
    },
}

/// Integer-valued service-time law with positive support.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceDist {
    kind: ServiceKind,
    mean: f64,
    second_moment: f64,
    pmf: Pmf,
}

impl ServiceDist {
    /// Family tag.
    pub fn kind(&self) -> ServiceKind {
        self.kind
    }

    /// Nominal mean service time.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Nominal `E[X^2]`.
    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    /// Nominal variance.
    pub fn variance(&self) -> f64 {
        (self.second_moment - self.mean * self.mean).max(0.0)
    }

    /// Nominal coefficient of variation.
    pub fn cv(&self) -> f64 {
        libm::sqrt(self.variance()) / self.mean
    }

    /// Truncated pmf.
    pub fn pmf(&self) -> &Pmf {
        &self.pmf
    }

    /// Compound-Poisson law of the work brought by `Poisson(rate)` jobs.
    pub fn compound(&self, rate: f64, tail_eps: f64) -> Result<Pmf> {
        compound_poisson(rate, &self.pmf, tail_eps)
    }

    /// Posterior mixture `w[0] * slow + w[1] * fast`.
    pub fn mixture(weights: [f64; 2], slow: &ServiceDist, fast: &ServiceDist) -> Result<Self> {
        let pmf = Pmf::mixture(&[(weights[0], &slow.pmf), (weights[1], &fast.pmf)])?;
        Ok(Self {
            kind: ServiceKind::Posterior { weights },
            mean: weights[0] * slow.mean + weights[1] * fast.mean,
            second_moment: weights[0] * slow.second_moment + weights[1] * fast.second_moment,
            pmf,
        })
    }

    /// Inverse-cdf sampler over the truncated pmf.
    pub fn sampler(&self) -> PmfSampler {
        PmfSampler::new(&self.pmf)
    }
}

/// Point mass at an integer mean `chi >= 1`.
pub fn make_deterministic(chi: f64) -> Result<ServiceDist> {
    if !(chi >= 1.0) || libm::floor(chi) != chi || chi > (u32::MAX as f64) {
        return Err(invalid!("deterministic service needs an integer mean >= 1, got {chi}"));
    }
    Ok(ServiceDist {
        kind: ServiceKind::Deterministic,
        mean: chi,
        second_moment: chi * chi,
        pmf: Pmf::point(chi as usize),
    })
}

/// Geometric law on `{1, 2, ...}` with success probability `1/chi`.
pub fn make_geometric(chi: f64) -> Result<ServiceDist> {
    if !(chi >= 1.0) || !chi.is_finite() {
        return Err(invalid!("geometric service needs mean >= 1, got {chi}"));
    }
    Ok(ServiceDist {
        kind: ServiceKind::Geometric,
        mean: chi,
        second_moment: geometric_second_moment(chi),
        pmf: geometric_pmf(chi, 1.0, SERVICE_TAIL_EPS),
    })
}

/// Geometric mixture with mean `chi` and coefficient of variation `cv_target`.
///
/// The short component is fixed to unit service (a geometric law with mean 1),
/// and the weight `beta` of that component is found by bisection so that the
/// mixture has the requested CV; the long component's mean then follows from
/// the mean constraint. Targets at (or within `1e-3` below) the plain
/// geometric CV collapse to [`make_geometric`].
pub fn make_geometric_mixture(chi: f64, cv_target: f64) -> Result<ServiceDist> {
    if !(chi > 1.0) || !chi.is_finite() {
        return Err(invalid!("geometric mixture needs mean > 1, got {chi}"));
    }
    let geo_cv = libm::sqrt(1.0 - 1.0 / chi);
    if !cv_target.is_finite() || cv_target < geo_cv - 1e-3 {
        return Err(invalid!(
            "CV {cv_target} is below the geometric CV {geo_cv} at mean {chi}"
        ));
    }
    if cv_target <= geo_cv {
        return make_geometric(chi);
    }

    let target_second = chi * chi * (1.0 + cv_target * cv_target);
    let second = |beta: f64| {
        let long = (chi - beta) / (1.0 - beta);
        beta + (1.0 - beta) * geometric_second_moment(long)
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if second(mid) < target_second {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let beta = 0.5 * (lo + hi);
    let long_mean = (chi - beta) / (1.0 - beta);
    let mut pmf = geometric_pmf(long_mean, 1.0 - beta, SERVICE_TAIL_EPS);
    pmf.mass[1] += beta;
    let pmf = Pmf::with_tail(pmf.mass, pmf.tail_bound - beta);
    Ok(ServiceDist {
        kind: ServiceKind::GeometricMixture {
            unit_weight: beta,
            long_mean,
        },
        mean: chi,
        second_moment: second(beta),
        pmf,
    })
}

fn geometric_second_moment(chi: f64) -> f64 {
    2.0 * chi * chi - chi
}

/// `scale * P(G = k)` for `G` geometric with mean `chi`, truncated where the
/// remaining tail drops below `eps`.
fn geometric_pmf(chi: f64, scale: f64, eps: f64) -> Pmf {
    let p = 1.0 / chi;
    let r = 1.0 - p;
    if r <= 0.0 {
        return Pmf::with_tail(vec![0.0, scale], 1.0 - scale);
    }
    let mut mass = vec![0.0];
    let mut term = scale * p;
    let mut tail = scale;
    while tail > eps {
        mass.push(term);
        tail *= r;
        term *= r;
    }
    Pmf::with_tail(mass, tail + (1.0 - scale))
}

/// Inverse-cdf sampler for a truncated pmf.
#[derive(Debug, Clone)]
pub struct PmfSampler {
    cdf: Vec<f64>,
}

impl PmfSampler {
    /// Precomputes the cumulative masses.
    pub fn new(pmf: &Pmf) -> Self {
        let mut acc = 0.0;
        let cdf = pmf
            .mass()
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        Self { cdf }
    }

    /// Draws one value; draws falling into the truncated tail map to `K`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>() * self.cdf[self.cdf.len() - 1];
        self.cdf
            .partition_point(|&c| c <= u)
            .min(self.cdf.len() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson_pmf(rate: f64, n: usize) -> f64 {
        let mut p = libm::exp(-rate);
        for k in 1..=n {
            p *= rate / k as f64;
        }
        p
    }

    #[test]
    fn deterministic_is_point_mass() {
        let d = make_deterministic(4.0).unwrap();
        assert_eq!(d.pmf().get(4), 1.0);
        assert_eq!(d.cv(), 0.0);
        let m = d.pmf().moments();
        assert_eq!((m.mean, m.variance), (4.0, 0.0));
        assert_eq!(make_deterministic(1.0).unwrap().pmf().get(1), 1.0);
        let two = make_deterministic(2.0).unwrap().pmf().moments();
        assert_eq!((two.mean, two.variance), (2.0, 0.0));
    }

    #[test]
    fn deterministic_rejects_bad_means() {
        assert!(matches!(make_deterministic(2.5), Err(Error::InvalidParameter(_))));
        assert!(matches!(make_deterministic(0.0), Err(Error::InvalidParameter(_))));
        assert!(make_deterministic(f64::NAN).is_err());
    }

    #[test]
    fn geometric_values() {
        let g = make_geometric(2.0).unwrap();
        assert_eq!(g.pmf().get(0), 0.0);
        assert!((g.pmf().get(1) - 0.5).abs() < 1e-15);
        assert!((g.pmf().get(2) - 0.25).abs() < 1e-15);
        assert!((g.pmf().moments().cv - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4);
        let four = make_geometric(4.0).unwrap();
        assert!((four.cv() - 0.866).abs() < 1e-3);
        assert_eq!((four.cv() * 100.0).round() / 100.0, 0.87);
        let unit = make_geometric(1.0).unwrap();
        assert_eq!(unit.pmf().mass(), &[0.0, 1.0]);
        assert_eq!(unit.cv(), 0.0);
        assert!(make_geometric(0.5).is_err());
    }

    #[test]
    fn geometric_cv_identity() {
        for chi in [1.5, 2.0, 3.7, 4.0, 10.0] {
            let g = make_geometric(chi).unwrap();
            let cv = g.pmf().moments().cv;
            assert!((cv * cv + 1.0 / chi - 1.0).abs() < 1e-9, "chi={chi}");
            assert!(g.pmf().tail_bound() <= DEFAULT_TAIL_EPS);
            assert!((g.pmf().mean() - chi).abs() <= 10.0 * DEFAULT_TAIL_EPS * g.pmf().max_value() as f64);
        }
    }

    #[test]
    fn mixture_hits_mean_and_cv() {
        for (chi, cv) in [(4.0, 1.74), (2.0, 1.42), (4.0, 1.732), (3.0, 2.5)] {
            let m = make_geometric_mixture(chi, cv).unwrap();
            let mo = m.pmf().moments();
            assert!((mo.mean - chi).abs() < 1e-6, "mean {} vs {chi}", mo.mean);
            assert!((mo.cv - cv).abs() < 1e-6, "cv {} vs {cv}", mo.cv);
            assert!((m.cv() - cv).abs() < 1e-9);
            assert_eq!(m.pmf().get(0), 0.0);
            assert!(matches!(m.kind(), ServiceKind::GeometricMixture { .. }));
        }
    }

    #[test]
    fn mixture_boundary_and_infeasible() {
        let m = make_geometric_mixture(4.0, 0.866).unwrap();
        assert_eq!(m.kind(), ServiceKind::Geometric);
        assert!(matches!(make_geometric_mixture(4.0, 0.5), Err(Error::InvalidParameter(_))));
        assert!(make_geometric_mixture(1.0, 1.0).is_err());
    }

    #[test]
    fn compound_zero_rate_is_point_at_zero() {
        let x = make_geometric(3.0).unwrap();
        let h = x.compound(0.0, DEFAULT_TAIL_EPS).unwrap();
        assert_eq!(h.mass(), &[1.0]);
        assert!(compound_poisson(-1.0, x.pmf(), DEFAULT_TAIL_EPS).is_err());
    }

    #[test]
    fn compound_with_unit_jumps_is_poisson() {
        let x = make_deterministic(1.0).unwrap();
        let h = x.compound(1.0, DEFAULT_TAIL_EPS).unwrap();
        for k in 0..15 {
            assert!((h.get(k) - poisson_pmf(1.0, k)).abs() < 1e-15, "k={k}");
        }
        assert!(h.tail_bound() <= DEFAULT_TAIL_EPS);
    }

    #[test]
    fn compound_matches_mixture_of_convolutions() {
        // Oracle: sum_n Poisson(0.7)(n) * x^{*n}, n <= 60, by repeated convolution.
        let x = make_geometric(2.0).unwrap();
        let h = x.compound(0.7, DEFAULT_TAIL_EPS).unwrap();
        let k_max = 40;
        let mut oracle = vec![0.0; k_max + 1];
        let mut power = Pmf::point(0);
        for n in 0..=60 {
            let w = poisson_pmf(0.7, n);
            for (k, o) in oracle.iter_mut().enumerate() {
                *o += w * power.get(k);
            }
            power = convolve(&power, x.pmf());
            power.mass.truncate(k_max + 1);
        }
        let diff = (0..=k_max).map(|k| (h.get(k) - oracle[k]).abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-10, "sup diff {diff}");
    }

    #[test]
    fn compound_large_rate_splits() {
        let x = make_deterministic(1.0).unwrap();
        let h = x.compound(800.0, DEFAULT_TAIL_EPS).unwrap();
        assert!((h.mean() - 800.0).abs() < 1e-6);
        assert!(h.tail_bound() <= 1e-11);
    }

    #[test]
    fn convolve_identities() {
        let g = make_geometric(2.0).unwrap();
        let id = convolve(&Pmf::point(0), g.pmf());
        assert!(id.sup_distance(g.pmf()) == 0.0);
        let shift = convolve(&Pmf::point(2), &Pmf::point(3));
        assert_eq!(shift.get(5), 1.0);
        assert_eq!(shift.total(), 1.0);
    }

    #[test]
    fn convolve_geometric_square_is_negative_binomial() {
        // Sum of two Geometric(1/2) on {1,2,..}: P(S = k) = (k-1) (1/2)^k.
        let g = make_geometric(2.0).unwrap();
        let s = convolve(g.pmf(), g.pmf());
        let diff = (2..60)
            .map(|k| (s.get(k) - (k as f64 - 1.0) * libm::pow(0.5, k as f64)).abs())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-12);
        assert_eq!(s.get(0), 0.0);
        assert_eq!(s.get(1), 0.0);
    }

    #[test]
    fn moments_of_small_laws() {
        let m = Pmf::point(4).moments();
        assert_eq!((m.mean, m.variance, m.cv), (4.0, 0.0, 0.0));
        let u = Pmf::new(vec![0.5, 0.5], 0.0).unwrap().moments();
        assert_eq!((u.mean, u.variance, u.cv), (0.5, 0.25, 1.0));
    }

    #[test]
    fn pmf_validation() {
        assert!(Pmf::new(vec![], 0.0).is_err());
        assert!(Pmf::new(vec![0.7, 0.7], 0.0).is_err());
        assert!(Pmf::new(vec![-0.1, 1.0], 0.0).is_err());
        let p = Pmf::new(vec![0.5, 0.25], 0.0).unwrap();
        assert_eq!(p.tail_bound(), 0.25);
    }

    #[test]
    fn trim_charges_tail() {
        let mut p = Pmf::new(vec![0.9, 0.1 - 1e-13, 5e-14, 5e-14], 0.0).unwrap();
        p.trim_tail(1e-13);
        assert_eq!(p.max_value(), 1);
        assert!(p.tail_bound() >= 1e-13 - 1e-18);
    }

    #[test]
    fn sampler_matches_pmf() {
        use rand::SeedableRng;
        let x = make_geometric(2.0).unwrap();
        let s = x.sampler();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let mut ones = 0usize;
        let mut sum = 0usize;
        for _ in 0..n {
            let v = s.sample(&mut rng);
            assert!(v >= 1);
            ones += (v == 1) as usize;
            sum += v;
        }
        assert!((ones as f64 / n as f64 - 0.5).abs() < 0.005);
        assert!((sum as f64 / n as f64 - 2.0).abs() < 0.02);
    }
}
